#pragma once

#include <string>
#include <vector>

#include "duo/miners.hpp"

namespace duo::fixtures {

// Two informative numeric features with a 1:ratio class imbalance. The
// minority class ("yes") sits off-centre so the classes overlap.
inline Dataset imbalanced(std::size_t minority, std::size_t ratio, std::uint64_t seed) {
    Rng rng(seed);
    Vec a, b;
    std::vector<std::string> cls;
    const std::size_t n = minority * (ratio + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const bool yes = i % (ratio + 1) == 0;
        a.push_back((yes ? 1.2 : 0.0) + rng.normal());
        b.push_back((yes ? 1.2 : 0.0) + rng.normal());
        cls.push_back(yes ? "yes" : "no");
    }
    Dataset d;
    d.add_numeric("a", a);
    d.add_numeric("b", b);
    d.add_categorical("defective", cls, ColumnRole::label);
    return d;
}

} // namespace duo::fixtures
