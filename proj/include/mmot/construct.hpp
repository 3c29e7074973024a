#pragma once

#include <functional>
#include <map>
#include <string>

#include "mmot/core.hpp"
#include "mmot/quad_calc.hpp"

namespace mmot {

/// An instance bundled with an optimal plan, dual potentials certifying it,
/// and the analytic description of the contact set the plan lives on.
struct CounterexamplePackage {
  std::shared_ptr<const Instance> instance;
  Plan plan;
  PotentialSet potentials;
  int expected_support_dim = 0;
  /// Maps a parameter vector (length support_params) to a full tuple on the
  /// contact set where the surplus meets the potential sum exactly.
  std::function<std::vector<Vector>(const Vector&)> support_point;
  int support_params = 0;
  std::map<std::string, Matrix> details;
  std::string kind;
};

/// Four marginals with the second and fourth Dirac at the origin and the
/// first and third uniform on the cell centers of a grid_points^n lattice
/// that fall strictly inside the ball of the given radius. Every feasible
/// plan has surplus zero, so all of them are optimal: zero potentials
/// certify any plan, and nothing is unique. The packaged plan is the
/// product coupling.
CounterexamplePackage dirac_package(double radius, int grid_points, int n = 2);

/// Four plane marginals built from a linear closing map F that is not a
/// nonnegative multiple of the identity. A companion M with F + M singular
/// yields quadratic potentials whose contact set is a 3-dimensional graph
/// over (t, y); because A = M^{-1}F + I kills a direction, pairs of tuples
/// share their first coordinate, so no optimal plan is a graph over it.
/// n_samples tuples are drawn on the contact set (rounded up to even), half
/// of them partnered with a tuple reusing the same first coordinate.
CounterexamplePackage linear_map_package(const Matrix2& F, int n_samples,
                                         unsigned seed);

/// m >= 5 plane marginals with the identity closing map. The fixed matrix
/// [[-1,3],[0,-1]] factors into three symmetric positive definite matrices,
/// giving potentials whose contact set pins only one coordinate of the
/// second variable to the first; the free coordinate again breaks the graph
/// structure. Sampling mirrors linear_map_package.
CounterexamplePackage chain_package(int m, int n_samples, unsigned seed);

/// Instance in the regime where optimal plans concentrate on a graph: four
/// marginals on the cell centers of the [-1,1]^n cube with smooth seeded
/// densities, closing map x -> lambda * x. The density perturbation scales
/// like 1/grid_points^2 so the family converges to the uniform measure and
/// the mass an exact solver must split vanishes under refinement.
std::shared_ptr<const Instance> regular_instance(int grid_points, double lambda,
                                                 int n, unsigned seed);

/// Reduced two-variable surplus: x.y plus the supremum over (z, w) of
/// y.z + z.w + w.F(x) - u3(z) - u4(w), taken over the given grids. Used to
/// cross-check closed-form reductions against brute maximization.
double effective_surplus(const Vector& x, const Vector& y, const Potential& u3,
                         const Potential& u4, const AffineMap& F,
                         const GridSpec& zgrid, const GridSpec& wgrid);

}  // namespace mmot
