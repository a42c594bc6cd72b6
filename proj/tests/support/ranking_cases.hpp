#pragma once

// Hand-labelled listwise responses and the scores they must parse to.
// nullopt marks a response that has to be rejected as malformed.

#include <optional>
#include <string>
#include <vector>

namespace fixtures {

struct RankingCase {
    std::string name;
    std::string raw;
    std::size_t n;
    std::optional<std::vector<double>> expected;
};

inline const std::vector<RankingCase>& ranking_cases() {
    using V = std::vector<double>;
    static const std::vector<RankingCase> cases = {
        // well-formed
        {"worked_example", "RANKING: 3:0.92, 1:0.75, 2:0.41\nReasoning: shared birth place.", 3, V{0.75, 0.41, 0.92}},
        {"no_reasoning_line", "RANKING: 1:0.9, 2:0.1", 2, V{0.9, 0.1}},
        {"no_spaces", "RANKING:2:0.5,1:0.25", 2, V{0.25, 0.5}},
        {"extra_spaces", "RANKING:   1 : 0.3 ,  2 :0.6  ", 2, V{0.3, 0.6}},
        {"leading_indent", "   RANKING: 1:0.8", 1, V{0.8}},
        {"preamble_lines", "Sure.\nHere you go:\nRANKING: 2:1.0, 1:0.0\nReasoning: x", 2, V{0.0, 1.0}},
        {"crlf", "RANKING: 1:0.7, 2:0.2\r\nReasoning: y\r\n", 2, V{0.7, 0.2}},
        {"integer_scores", "RANKING: 1:1, 2:0", 2, V{1.0, 0.0}},
        {"exponent_score", "RANKING: 1:5e-1, 2:2.5E-1", 2, V{0.5, 0.25}},
        {"ten_candidates",
         "RANKING: 10:0.99, 9:0.9, 8:0.8, 7:0.7, 6:0.6, 5:0.5, 4:0.4, 3:0.3, 2:0.2, 1:0.1",
         10, V{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99}},
        {"first_ranking_line_wins", "RANKING: 1:0.2, 2:0.4\nRANKING: 1:0.9, 2:0.1", 2, V{0.2, 0.4}},
        {"trailing_comma", "RANKING: 1:0.4, 2:0.6,", 2, V{0.4, 0.6}},
        // clamping
        {"clamp_above", "RANKING: 1:1.7", 2, V{1.0, 0.0}},
        {"clamp_below", "RANKING: 1:-0.3, 2:0.5", 2, V{0.0, 0.5}},
        {"clamp_both", "RANKING: 2:42, 1:-7", 2, V{0.0, 1.0}},
        {"clamp_infinity", "RANKING: 1:inf, 2:-inf", 2, V{1.0, 0.0}},
        // missing indices
        {"missing_one", "RANKING: 3:0.9, 1:0.5", 3, V{0.5, 0.0, 0.9}},
        {"only_last", "RANKING: 4:0.6", 4, V{0.0, 0.0, 0.0, 0.6}},
        {"nan_score_dropped", "RANKING: 1:nan, 2:0.3", 2, V{0.0, 0.3}},
        {"junk_items_skipped", "RANKING: 1:abc, two:0.5, 2:0.8", 2, V{0.0, 0.8}},
        {"missing_colon_item", "RANKING: 1 0.5, 2:0.4", 2, V{0.0, 0.4}},
        // out-of-range indices
        {"index_zero", "RANKING: 0:0.9, 1:0.4", 2, V{0.4, 0.0}},
        {"index_too_large", "RANKING: 3:0.9, 2:0.7", 2, V{0.0, 0.7}},
        {"negative_index", "RANKING: -1:0.9, 1:0.2", 2, V{0.2, 0.0}},
        {"huge_index", "RANKING: 99999999999:0.9, 1:0.3", 1, V{0.3}},
        {"all_out_of_range", "RANKING: 5:0.9, 6:0.8", 3, std::nullopt},
        // duplicate indices
        {"duplicate_first_kept", "RANKING: 1:0.9, 1:0.1, 2:0.5", 2, V{0.9, 0.5}},
        {"duplicate_after_clamp", "RANKING: 2:3.0, 2:0.2", 2, V{0.0, 1.0}},
        {"duplicate_invalid_then_valid", "RANKING: 1:x, 1:0.6", 1, V{0.6}},
        // absent RANKING line
        {"free_text", "I think candidate 3 is best.", 3, std::nullopt},
        {"empty_response", "", 2, std::nullopt},
        {"lowercase_keyword", "ranking: 1:0.9", 1, std::nullopt},
        {"keyword_mid_line", "My RANKING: 1:0.9", 1, std::nullopt},
        {"json_answer", "{\"ranking\": [1, 2]}", 2, std::nullopt},
        {"missing_colon_keyword", "RANKING 1:0.9, 2:0.1", 2, std::nullopt},
        // reasoning only / empty ranking body
        {"reasoning_only", "Reasoning: candidate 2 shares the spouse triple.", 2, std::nullopt},
        {"empty_ranking_body", "RANKING:\nReasoning: none match.", 2, std::nullopt},
        {"ranking_without_scores", "RANKING: 2, 1, 3", 3, std::nullopt},
        {"reasoning_before_ranking", "Reasoning: 1 fits.\nRANKING: 1:0.8", 2, V{0.8, 0.0}},
        {"whitespace_only", "  \n\t\n", 1, std::nullopt},
    };
    return cases;
}

} // namespace fixtures
