#include "ctikg/rouge.hpp"

#include "ctikg/triple_parser.hpp"
#include "ctikg/util.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace ctikg::rouge {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

double f1_of(double precision, double recall) {
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::string, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int k = 1; k < n; ++k) {
            key += '\x1f';
            key += tokens[i + k];
        }
        counts[key] += 1;
    }
    return counts;
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const size_t na = a.size(), nb = b.size();
    if (na == 0 || nb == 0) return 0;
    std::vector<size_t> prev(nb + 1, 0), cur(nb + 1, 0);
    for (size_t i = 1; i <= na; ++i) {
        for (size_t j = 1; j <= nb; ++j) {
            if (a[i - 1] == b[j - 1]) cur[j] = prev[j - 1] + 1;
            else cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[nb];
}

}  // namespace

RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n) {
    if (n < 1) throw InvalidN();
    auto cand = ngram_counts(candidate, n);
    auto ref = ngram_counts(reference, n);

    long cand_total = 0, ref_total = 0, matched = 0;
    for (const auto& [k, c] : cand) cand_total += c;
    for (const auto& [k, c] : ref) ref_total += c;
    // Clipped match count: min of the two multiplicities per n-gram.
    for (const auto& [k, c] : cand) {
        auto it = ref.find(k);
        if (it != ref.end()) matched += std::min(c, it->second);
    }

    RougeScore s;
    s.recall = ref_total > 0 ? static_cast<double>(matched) / ref_total : 0.0;
    s.precision = cand_total > 0 ? static_cast<double>(matched) / cand_total : 0.0;
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference) {
    const size_t l = lcs_length(candidate, reference);
    RougeScore s;
    s.recall = reference.empty() ? 0.0 : static_cast<double>(l) / reference.size();
    s.precision = candidate.empty() ? 0.0 : static_cast<double>(l) / candidate.size();
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

std::string triples_to_eval_text(const std::vector<ontology::TypedTriple>& triples) {
    std::vector<ontology::TypedTriple> sorted = parser::canonicalize(triples);
    std::string text;
    for (size_t i = 0; i < sorted.size(); ++i) {
        if (i) text += ", ";
        text += ontology::format_triple(sorted[i]);
    }
    return text;
}

ExtractionScores evaluate_extraction(const std::vector<ontology::TypedTriple>& candidate,
                                     const std::vector<ontology::TypedTriple>& reference,
                                     const std::set<int>& ns) {
    auto cand_tokens = tokenize(triples_to_eval_text(candidate));
    auto ref_tokens = tokenize(triples_to_eval_text(reference));

    ExtractionScores out;
    for (int n : ns) out.by_n[n] = rouge_n(cand_tokens, ref_tokens, n);
    out.lcs = rouge_l(cand_tokens, ref_tokens);
    return out;
}

namespace {

ExtractionScores mean_scores(const std::vector<ExtractionScores>& scores, bool recompute_f1) {
    if (scores.empty()) throw EmptyInput();
    ExtractionScores out;
    for (const auto& [n, unused] : scores.front().by_n) out.by_n[n] = {};

    auto add = [](RougeScore& acc, const RougeScore& s) {
        acc.precision += s.precision;
        acc.recall += s.recall;
        acc.f1 += s.f1;
    };
    for (const ExtractionScores& s : scores) {
        for (const auto& [n, score] : s.by_n) add(out.by_n.at(n), score);
        add(out.lcs, s.lcs);
    }
    const double k = static_cast<double>(scores.size());
    auto finish = [&](RougeScore& s) {
        s.precision /= k;
        s.recall /= k;
        s.f1 = recompute_f1 ? f1_of(s.precision, s.recall) : s.f1 / k;
    };
    for (auto& [n, score] : out.by_n) finish(score);
    finish(out.lcs);
    return out;
}

}  // namespace

ExtractionScores aggregate(const std::vector<ExtractionScores>& scores) {
    return mean_scores(scores, /*recompute_f1=*/false);
}

ExtractionScores aggregate_f1_of_means(const std::vector<ExtractionScores>& scores) {
    return mean_scores(scores, /*recompute_f1=*/true);
}

}  // namespace ctikg::rouge
