#pragma once

// Two-block co-occurrence fixture: labels a0..a9 and b0..b9 co-occur densely inside their
// block and never across. Expected counts follow a rank-one popularity model so the log
// counts carry structure; train and test draws are independent Poisson samples.

#include <cmath>
#include <random>
#include <string>

#include "gazessl/cooc_embed.hpp"
#include "gazessl/rng.hpp"

namespace fixture {

struct TwoBlock {
  gazessl::CoocMatrix train;
  gazessl::CoocMatrix test;
};

inline TwoBlock two_block(std::uint64_t seed, int per_block = 10) {
  gazessl::Rng rng(seed);
  std::uniform_real_distribution<double> pop(0.5, 2.0);
  const int n = 2 * per_block;
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& v : w) v = pop(rng);
  TwoBlock out;
  for (int i = 0; i < n; ++i) {
    const std::string name = (i < per_block ? "a" : "b") + std::to_string(i % per_block);
    out.train.labels.push_back(name);
  }
  out.test.labels = out.train.labels;
  out.train.counts = Eigen::MatrixXd::Zero(n, n);
  out.test.counts = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if ((i < per_block) != (j < per_block)) continue;
      const double mean = 30.0 * w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)];
      std::poisson_distribution<int> draw(mean);
      for (auto* m : {&out.train.counts, &out.test.counts}) {
        const double c = std::max(1, draw(rng));
        (*m)(i, j) = c;
        (*m)(j, i) = c;
      }
    }
  return out;
}

}  // namespace fixture
