#pragma once

#include <utility>

#include "polarq/channel.hpp"

namespace polarq {

// One polarization step on a BSC mixture. Combining BSC(a) and BSC(b) gives
//   minus: BSC(a(1-b) + b(1-a))
//   plus:  BSC(ab/q_g) with weight q_g = ab + (1-a)(1-b), and
//          BSC(a(1-b)/q_b) with weight q_b = a(1-b) + b(1-a),
// so the children of an m-mass mixture enumerate the m(m+1)/2 unordered
// component pairs (both formulas are pair-symmetric after folding).
MassDistribution minus_transform(const MassDistribution& w);
MassDistribution plus_transform(const MassDistribution& w);

// (minus(w), plus(w)); the left and right children of a tree node.
std::pair<MassDistribution, MassDistribution> transform_pair(const MassDistribution& w);

}  // namespace polarq
