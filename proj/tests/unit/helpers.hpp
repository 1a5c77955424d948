#pragma once

#include <functional>

#include "nsrlab/fieldlab.hpp"

namespace testing {

// Stack whose velocity (and optional pressure) is set cell by cell from closures of (x, t).
inline nsrlab::FieldStack make_stack(
    const nsrlab::Grid& g, const std::function<Eigen::Vector3d(const Eigen::Vector3d&, double)>& u,
    const std::function<double(const Eigen::Vector3d&, double)>& p = nullptr) {
  nsrlab::FieldStack s;
  s.grid = g;
  s.u = nsrlab::SampledField(g, 3);
  if (p) s.p = nsrlab::SampledField(g, 1);
  for (int j = 0; j < g.nt; ++j)
    for (std::int64_t c = 0; c < g.cells(); ++c) {
      const Eigen::Vector3d x = g.node(c);
      s.u.slice(j).row(c) = u(x, g.time(j)).transpose().array();
      if (p) s.p->slice(j)(c, 0) = p(x, g.time(j));
    }
  return s;
}

inline nsrlab::FieldStack constant_stack(const nsrlab::Grid& g, const Eigen::Vector3d& c, double p = 0.0) {
  return make_stack(g, [&](const Eigen::Vector3d&, double) { return c; },
                    [&](const Eigen::Vector3d&, double) { return p; });
}

}  // namespace testing
