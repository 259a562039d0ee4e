#pragma once

#include <cstdint>
#include <vector>

#include "stlab/keystone.hpp"

namespace stlab {

struct CarlesonAudit {
  std::size_t apexes = 0;         // thick cubes with nonempty shadow
  std::size_t local_checks = 0;   // (apex, iceberg cube, exponent) triples
  std::size_t violations = 0;
  double max_local_ratio = 0.0;   // sum / bound
  double max_global_ratio = 0.0;
  std::size_t thick_iceberg_cubes = 0;   // iceberg cubes below the apex that are thick
  std::size_t overlapping_shadows = 0;
  std::size_t apex_layer_mismatches = 0;
  std::size_t empty_shadows = 0;         // thick cubes above the leaf level with no shadow
  int max_depth = 0;
};

// Packing of shadows inside icebergs for exponents dt in [d, n].
CarlesonAudit carleson_audit(const KeystoneIndex& ki, int c, const std::vector<double>& exponents);

struct FamilyPackingAudit {
  std::size_t cubes = 0;
  std::size_t families = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;
};

// Families C of cubes thick for `family` with {Q} >= C >= the first canonical
// generation of `generations` strictly inside Q: the starting generation and
// its coarsenings, level by level and at random.
FamilyPackingAudit family_packing_audit(const KeystoneIndex& generations, const Decomposition& dec,
                                        const KeystoneIndex& family, std::uint64_t seed,
                                        int random_coarsenings = 4);

struct MultiplicityAudit {
  std::int64_t max_multiplicity = 0;
  std::int64_t bound = 0;
  std::size_t points = 0;
  std::size_t subset_failures = 0;  // meeting cQ but not [c]Q
};

// Counts how many c-dilates of level-k cubes contain each point of the
// level-(k+3) lattice over a window, and checks the [c]-rounding property on
// the same window.
MultiplicityAudit dilation_multiplicity(int dim, double c, int level = 0);

struct CavityAudit {
  std::size_t cavities = 0;
  std::int64_t max_overlap = 0;
  std::int64_t bound = 0;
  // Smallest |Omega(Q)| / l(Q)^n over non-thick cubes of the tree.
  double min_volume_ratio = 0.0;
  std::size_t thin_cubes = 0;
};

CavityAudit cavity_audit(const KeystoneIndex& ki, int c, int kappa = 3);

}  // namespace stlab
