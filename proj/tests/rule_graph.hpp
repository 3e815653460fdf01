#pragma once

// Bundled 20-entity rule-graph fixture for link-prediction tests. The rule:
// every malware entity targets the one platform entity. Four rule triples
// are held out; their entities stay transductively covered through the isA
// and reports relations.

#include "ctikg/kg.hpp"

#include <vector>

namespace ctikg::testfix {

struct RuleGraph {
    std::vector<kg::IdTriple> train;
    std::vector<kg::IdTriple> test;  // held-out rule triples (m, targets, platform)
    int ne = 20;
    int nr = 3;
    static constexpr int kPlatform = 0;  // "Android"
    static constexpr int kType = 1;      // "Trojan"
    static constexpr int kReporter = 2;  // "ESET"
    static constexpr int kTargets = 0;
    static constexpr int kIsA = 1;
    static constexpr int kReports = 2;
};

inline RuleGraph make_rule_graph() {
    RuleGraph g;
    for (int m = 3; m < 20; ++m) {
        if (m >= 16) g.test.push_back({m, RuleGraph::kTargets, RuleGraph::kPlatform});
        else g.train.push_back({m, RuleGraph::kTargets, RuleGraph::kPlatform});
        g.train.push_back({m, RuleGraph::kIsA, RuleGraph::kType});
        g.train.push_back({RuleGraph::kReporter, RuleGraph::kReports, m});
    }
    return g;
}

}  // namespace ctikg::testfix
