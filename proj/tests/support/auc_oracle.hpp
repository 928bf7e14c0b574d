#pragma once

#include <span>

namespace dgad::testing {

// P(s_pos > s_neg) + 0.5 P(s_pos = s_neg) by enumerating every pair.
inline double pairwise_auc(std::span<const double> s, std::span<const int> y) {
    long double wins = 0;
    long double pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1;
            if (s[i] > s[j]) wins += 1;
            else if (s[i] == s[j]) wins += 0.5L;
        }
    }
    return static_cast<double>(wins / pairs);
}

}  // namespace dgad::testing
