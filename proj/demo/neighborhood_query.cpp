// Similarity neighborhoods of one Double Gyre particle as the scale grows.
//
// At the smallest scales high-frequency modes dominate and the neighborhood
// scatters; from moderate scales on it follows the source's orbit inside its
// own gyre. demo_neighborhood_query [source-index]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "driftscope/diffusion.hpp"
#include "driftscope/flows.hpp"
#include "driftscope/landmarks.hpp"
#include "driftscope/similarity.hpp"

using namespace driftscope;

int main(int argc, char** argv) {
  auto flow = make_flow(FlowId::double_gyre, {60, 30});
  flow.steps = 30;
  const auto ds = integrate_flow(flow);
  // Default source: halfway between the left gyre's center and its edge.
  const std::size_t source = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 15 * 60 + 8;
  if (source >= ds.size()) {
    std::fprintf(stderr, "source must be below %zu\n", ds.size());
    return 1;
  }

  BuildOptions opt;
  const auto E = build_embedding(ds, select_landmarks(ds, 600, LandmarkStrategy::tfps, 1, 5), opt).embedding;
  const auto p = ds.position(source, 0);
  auto orbit = [&](std::size_t j) {
    const auto q = ds.position(j, 0);
    const double cx = q[0] < 1.0 ? 0.5 : 1.5;
    return std::hypot(q[0] - cx, q[1] - 0.5);
  };
  std::printf("source %zu seeded at (%.3f, %.3f), %.3f from its gyre center\n", source, p[0], p[1], orbit(source));

  for (double s : {1.0, 10.0, 50.0, 200.0}) {
    // Radius that admits the 100 most similar particles at this scale.
    auto d = distances_from(E, source, s);
    auto sorted = d;
    std::nth_element(sorted.begin(), sorted.begin() + 100, sorted.end());
    const double radius = sorted[100];
    const auto r = similarity_neighborhood(E, source, s, radius, 12);
    double spread = 0, same_side = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d[j] > radius) continue;
      spread += std::abs(orbit(j) - orbit(source));
      same_side += (ds.position(j, 0)[0] < 1.0) == (p[0] < 1.0);
    }
    const double c = static_cast<double>(r.candidates);
    std::printf("s=%-5g radius %.4f: %zu candidates, mean orbit offset %.3f, %.0f%% in the same gyre; sample:", s,
                radius, r.candidates, spread / c, 100.0 * same_side / c);
    for (std::size_t q = 1; q < r.members.size(); ++q) std::printf(" %zu", r.members[q]);
    std::printf("\n");
  }
  return 0;
}
