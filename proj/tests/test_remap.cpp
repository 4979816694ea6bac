#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sldg/remap.hpp"

using namespace sldg;
using namespace oracle;
using std::numbers::pi;

TEST(PsiStar, ConstantIsReproducedOnAnyGeometry) {
  const PhaseMesh mesh(4.0, 2.0, 4, 4);
  NodeLattice lat(mesh);
  trace_with(lat, [](Point p) { return Point{p.x - 0.3 * p.v - 0.1 * std::sin(3 * p.v), p.v + 0.05 * std::cos(p.x)}; });
  for (int k = 0; k <= 2; ++k) {
    const UpstreamCell u = build_upstream(lat, 1, 2, k == 2 ? UpstreamMode::qc : UpstreamMode::quad);
    const PsiStar psi = reconstruct_psi_star(u, k);
    for (double x : {0.5, 1.2, 1.7})
      for (double v : {-0.3, 0.2}) EXPECT_DOUBLE_EQ(psi(0, x, v), 1.0);
  }
}

TEST(PsiStar, TranslationIsExact) {
  const PhaseMesh mesh(4.0, 2.0, 8, 8);
  const double a = 0.37, b = -0.12;
  NodeLattice lat(mesh);
  trace_with(lat, [&](Point p) { return Point{p.x + a, p.v + b}; });
  for (int k = 1; k <= 2; ++k) {
    const UpstreamCell u = build_upstream(lat, 3, 4, UpstreamMode::quad);
    const PsiStar psi = reconstruct_psi_star(u, k);
    for (int m = 0; m < num_basis(k); ++m)
      for (double x : {1.6, 1.8, 2.1})
        for (double v : {-0.1, 0.0, 0.3}) EXPECT_NEAR(psi(m, x, v), basis_at(mesh, 3, 4, m, x - a, v - b), 1e-12);
  }
}

TEST(PsiStar, ShearIsExact) {
  const PhaseMesh mesh(4.0, 2.0, 8, 8);
  const double dt = 0.7;
  NodeLattice lat(mesh);
  trace_with(lat, free_stream(dt));
  for (int k = 1; k <= 2; ++k) {
    const UpstreamCell u = build_upstream(lat, 2, 6, UpstreamMode::quad);
    const PsiStar psi = reconstruct_psi_star(u, k);
    for (int m = 0; m < num_basis(k); ++m)
      for (double x : {0.0, 0.5, 1.1})
        for (double v : {0.9, 1.1}) EXPECT_NEAR(psi(m, x, v), basis_at(mesh, 2, 6, m, x + v * dt, v), 1e-12);
  }
}

TEST(PsiStar, DegenerateFitIsReportedAsDistortion) {
  const PhaseMesh mesh(4.0, 2.0, 4, 4);
  UpstreamCell u = build_upstream_quad(mesh, {0, 0}, {Point{0, 0}, Point{1, 0}, Point{1, 1}, Point{0, 1}});
  for (Point& p : u.pts) p = {p.x, 0.5};  // all nodes on a line
  EXPECT_THROW(reconstruct_psi_star(u, 1), DistortedCellError);
}

TEST(LineIntegrals, GreenIdentityOnRandomQuadrilaterals) {
  const PhaseMesh mesh(10.0, 4.0, 10, 8);
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Clipper clip(mesh);
  for (int n = 0; n < 200; ++n) {
    // Convex quadrilateral: four points at increasing angles around a center.
    const Point c{5.0 + 2.0 * u(rng), 0.5 * u(rng)};
    std::array<Point, 4> corners;
    for (int q = 0; q < 4; ++q) {
      const double ang = 0.5 * pi * (q + 0.5 + 0.3 * u(rng)) - 0.75 * pi;
      const double rad = 1.0 + 0.6 * u(rng);
      corners[q] = {c.x + 1.3 * rad * std::cos(ang), c.v + rad * std::sin(ang)};
    }
    // build_upstream_quad wants c1, c3, c9, c7 (counter-clockwise from bottom left).
    const UpstreamCell cell = build_upstream_quad(mesh, {5, 4}, corners);
    double coef[15];
    for (double& a : coef) a = u(rng);
    auto g = [&](double x, double v) {
      const double X = x - 5.0, V = v;
      double s = 0.0;
      int t = 0;
      for (int d = 0; d <= 4; ++d)
        for (int p = 0; p <= d; ++p) s += coef[t++] * std::pow(X, p) * std::pow(V, d - p);
      return s;
    };
    struct Kernel {
      std::function<double(double, double)> g;
      double total = 0.0;
      bool wants(int, int) const { return true; }
      void operator()(int, int, double x, double v, double w) { total += w * g(x, v); }
    } kernel{g};
    integrate_pieces(cell, clip.decompose(cell), mesh, 2, kernel);
    const double oracle = triangle_integral(corners[0], corners[1], corners[2], g) +
                          triangle_integral(corners[0], corners[2], corners[3], g);
    EXPECT_NEAR(kernel.total, oracle, 1e-12 * std::max(1.0, std::abs(oracle))) << "trial " << n;
  }
}

TEST(LineIntegrals, UnitSquareArea) {
  const PhaseMesh mesh(4.0, 2.0, 4, 4);
  const UpstreamCell cell = build_upstream_quad(mesh, {1, 2}, {Point{1, 0}, Point{2, 0}, Point{2, 1}, Point{1, 1}});
  struct Kernel {
    double total = 0.0;
    bool wants(int, int) const { return true; }
    void operator()(int, int, double, double, double w) { total += w; }
  } kernel;
  Clipper clip(mesh);
  integrate_pieces(cell, clip.decompose(cell), mesh, 0, kernel);
  EXPECT_NEAR(kernel.total, 1.0, 1e-15);
}

TEST(LineIntegrals, ShiftedSquareMatchesDenseQuadrature) {
  const PhaseMesh mesh(4.0, 2.0, 4, 4);
  const DGField f = random_field(mesh, 2, 8);
  const double dx = mesh.dx(), dv = mesh.dv();
  NodeLattice lat(mesh);
  trace_with(lat, [&](Point p) { return Point{p.x + 0.5 * dx, p.v}; });
  const UpstreamCell u = build_upstream(lat, 1, 2, UpstreamMode::quad);
  const PsiStar psi = reconstruct_psi_star(u, 2);
  Clipper clip(mesh);
  double got[6];
  integrate_subareas(f, psi, u, clip.decompose(u), 6, got);
  for (int m = 0; m < 6; ++m) {
    auto g = [&](double x, double v) { return evaluate(f, x, v, CellIndex{x < mesh.x_face(2) ? 1 : 2, 2}) * psi(m, x, v); };
    const double v0 = mesh.v_face(2), v1 = v0 + dv;
    const double oracle = rectangle_integral(1.5 * dx, 2.0 * dx, v0, v1, g) + rectangle_integral(2.0 * dx, 2.5 * dx, v0, v1, g);
    EXPECT_NEAR(got[m], oracle, 1e-12);
  }
}

TEST(Remap, IdentityFlowReproducesField) {
  const PhaseMesh mesh(3.0, 2.0, 6, 8);
  NodeLattice lat(mesh);
  lat.reset_to_sources();
  for (int k = 0; k <= 2; ++k) {
    const DGField f = random_field(mesh, k, 40 + k);
    const DGField g = remap_step(f, lat, UpstreamMode::quad);
    EXPECT_LT(linf_error(f, g), 1e-12) << "k=" << k;
  }
  const DGField f = random_field(mesh, 2, 50);
  EXPECT_LT(linf_error(f, remap_step(f, lat, UpstreamMode::qc)), 1e-12);
  EXPECT_THROW(remap_step(random_field(mesh, 1, 1), lat, UpstreamMode::qc), std::invalid_argument);
}

TEST(Remap, IntegerShiftShearIsExact) {
  // dt = dx / dv moves every grid node onto another grid node, so each
  // upstream cell is a parallelogram split by a diagonal into two triangles
  // inside neighbouring cells. Oracle: project f(x - v dt, v) with triangle
  // quadrature on both sides of the kink.
  const PhaseMesh mesh(2 * pi, 3.0, 8, 6);
  const double dt = mesh.dx() / mesh.dv();
  NodeLattice lat(mesh);
  trace_with(lat, free_stream(dt));
  for (auto [k, mode] : {std::pair{1, UpstreamMode::quad}, std::pair{2, UpstreamMode::quad}, std::pair{2, UpstreamMode::qc}}) {
    const DGField f = random_field(mesh, k, 7 + k);
    const DGField g = remap_step(f, lat, mode);
    double worst = 0.0;
    for (int i = 0; i < mesh.nx(); ++i)
      for (int j = 0; j < mesh.nv(); ++j) {
        const double x0 = mesh.x_face(i), x1 = x0 + mesh.dx(), v0 = mesh.v_face(j), v1 = v0 + mesh.dv();
        // x - v dt is a grid line along the diagonal from (x0, v0) to (x1, v1).
        const int shift = static_cast<int>(std::lround(v0 * dt / mesh.dx()));
        for (int m = 0; m < num_basis(k); ++m) {
          auto below = [&](double x, double v) {
            return evaluate(f, x - v * dt, v, CellIndex{mesh.wrap_index(i - shift), j}) *
                   basis_at(mesh, i, j, m, x, v);
          };
          auto above = [&](double x, double v) {
            return evaluate(f, x - v * dt, v, CellIndex{mesh.wrap_index(i - shift - 1), j}) *
                   basis_at(mesh, i, j, m, x, v);
          };
          const double exact = (triangle_integral({x0, v0}, {x1, v0}, {x1, v1}, below) +
                                triangle_integral({x0, v0}, {x1, v1}, {x0, v1}, above)) /
                               mesh.cell_area();
          worst = std::max(worst, std::abs(g.cell(CellIndex{i, j})[m] - exact));
        }
      }
    EXPECT_LT(worst, 1e-12) << "k=" << k;
  }
}

TEST(Remap, FreeStreamingConvergesAtOrderKPlusOne) {
  auto f0 = [](double x, double v) { return (1.0 + 0.5 * std::cos(x)) * std::exp(-0.5 * v * v); };
  const double T = 1.0;
  const int steps = 5;
  for (int k = 1; k <= 2; ++k) {
    double prev = 0.0;
    for (int n : {16, 32, 64}) {
      const PhaseMesh mesh(2 * pi, 6.0, n, n);
      NodeLattice lat(mesh);
      trace_with(lat, free_stream(T / steps));
      DGField f = project(mesh, f0, k);
      for (int s = 0; s < steps; ++s) f = remap_step(f, lat, UpstreamMode::quad);
      const double err = l2_error(f, [&](double x, double v) { return f0(x - v * T, v); });
      if (prev > 0.0) {
        EXPECT_GT(std::log2(prev / err), k + 1 - 0.2) << "k=" << k << " n=" << n;
      }
      prev = err;
    }
  }
}

namespace {

/// Smooth flow with curved images that keeps the velocity boundary fixed.
Map bounded_flow(const PhaseMesh& mesh, double dt) {
  const double vmax = mesh.v_max();
  return [=](Point p) {
    const double taper = 1.0 - (p.v / vmax) * (p.v / vmax);
    return Point{p.x - dt * p.v - 0.2 * dt * std::sin(p.v), p.v - 0.5 * dt * taper * std::sin(p.x)};
  };
}

}  // namespace

TEST(Remap, ConservesMassWithoutOutflow) {
  const PhaseMesh mesh(2 * pi, 4.0, 16, 16);
  NodeLattice lat(mesh);
  trace_with(lat, bounded_flow(mesh, 0.4));
  const DGField f = project(mesh, [](double x, double v) { return (1.0 + 0.5 * std::sin(x)) * std::exp(-v * v); }, 2);
  for (UpstreamMode mode : {UpstreamMode::quad, UpstreamMode::qc}) {
    const DGField g = remap_step(f, lat, mode);
    EXPECT_NEAR(total_mass(g), total_mass(f), 1e-11);
  }
  const DGField f1 = random_field(mesh, 1, 3);
  EXPECT_NEAR(total_mass(remap_step(f1, lat, UpstreamMode::quad)), total_mass(f1), 1e-11);
}

TEST(Remap, NonnegativeDataKeepsNonnegativeAverages) {
  const PhaseMesh mesh(2 * pi, 4.0, 16, 16);
  NodeLattice lat(mesh);
  trace_with(lat, bounded_flow(mesh, 0.6));
  // Sharp data whose projection undershoots; limiting restores f >= 0 pointwise.
  const DGField f = pp_limit(project(mesh, [](double x, double v) { return std::abs(v - std::sin(x)) < 0.5 ? 1.0 : 0.0; }, 2));
  const DGField g = remap_step(f, lat, UpstreamMode::qc);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) EXPECT_GE(g.cell(c)[0], -1e-12);
}

TEST(Remap, Linearity) {
  const PhaseMesh mesh(2 * pi, 4.0, 8, 8);
  NodeLattice lat(mesh);
  trace_with(lat, bounded_flow(mesh, 0.5));
  const DGField f = random_field(mesh, 2, 1), h = random_field(mesh, 2, 2);
  DGField combo(mesh, 2);
  for (std::size_t i = 0; i < combo.data().size(); ++i) combo.data()[i] = 1.5 * f.data()[i] - 0.7 * h.data()[i];
  const DGField rf = remap_step(f, lat, UpstreamMode::qc), rh = remap_step(h, lat, UpstreamMode::qc);
  const DGField rc = remap_step(combo, lat, UpstreamMode::qc);
  for (std::size_t i = 0; i < rc.data().size(); ++i) EXPECT_NEAR(rc.data()[i], 1.5 * rf.data()[i] - 0.7 * rh.data()[i], 1e-12);
}

TEST(Remap, OutflowIsAccountedByGhostRows) {
  // A uniform downward drift pushes mass through v = -v_max; the ghost-row
  // upstream cells hold exactly what the interior loses.
  const PhaseMesh mesh(2 * pi, 2.0, 8, 8);
  NodeLattice lat(mesh, 2);
  trace_with(lat, [](Point p) { return Point{p.x - 0.3 * p.v, p.v + 0.3}; });
  const DGField f = project(mesh, [](double x, double v) { return 1.0 + 0.3 * std::cos(x) + 0.1 * v; }, 2);
  const DGField g = remap_step(f, lat, UpstreamMode::quad);
  const double lost = upstream_mass(f, lat, UpstreamMode::quad, -2, 0) + upstream_mass(f, lat, UpstreamMode::quad, 8, 10);
  EXPECT_GT(lost, 0.1);
  EXPECT_NEAR(total_mass(g) + lost, total_mass(f), 1e-11);
}
