#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include "walkrl/errors.hpp"
#include "walkrl/walker/config.hpp"
#include "walkrl/walker/terrain.hpp"

namespace walkrl::walker {

// Generalized coordinates of the five-link walker.
enum Coord : std::size_t { kX, kY, kHullAngle, kHip1, kKnee1, kHip2, kKnee2, kDof };

// Rigid links; angles are absolute, measured from straight down, positive
// swinging the far end forward (+x).
enum Link : std::size_t { kHull, kThigh1, kShank1, kThigh2, kShank2, kLinks };

using Vec = std::array<double, kDof>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double angle = 0.0;
};

// Solver impulse slots carried between substeps to warm-start the next solve.
enum ImpulseSlot : std::size_t {
  kMotorSlot = 0,
  kLowerLimitSlot = 4,
  kUpperLimitSlot = 8,
  kTangentSlot = 12,
  kNormalSlot = 14,
  kSlots = 16
};

struct WalkerState {
  Vec q{};
  Vec v{};
  std::array<bool, 2> foot_contact{};
  std::array<double, kSlots> impulses{};

  double hull_x() const { return q[kX]; }
  double hull_y() const { return q[kY]; }
  double hull_angle() const { return q[kHullAngle]; }

  friend bool operator==(const WalkerState&, const WalkerState&) = default;
};

namespace detail {

inline Vec2 down(double a) { return {std::sin(a), -std::cos(a)}; }
inline Vec2 down_prime(double a) { return {std::cos(a), std::sin(a)}; }

// Which generalized coordinates sum into each link's absolute angle.
struct AngleSelector {
  std::array<std::size_t, 3> coords;
  std::size_t n;
};

inline constexpr std::array<AngleSelector, kLinks> kSelectors = {{
    {{kHullAngle, 0, 0}, 1},
    {{kHullAngle, kHip1, 0}, 2},
    {{kHullAngle, kHip1, kKnee1}, 3},
    {{kHullAngle, kHip2, 0}, 2},
    {{kHullAngle, kHip2, kKnee2}, 3},
}};

// A body point expressed as (q_x, q_y) + sum_k length_k * down(angle of link_k).
struct ChainPoint {
  std::array<double, 3> length{};
  std::array<Link, 3> link{};
  std::size_t n = 0;
};

struct Chains {
  std::array<ChainPoint, kLinks> com;
  std::array<ChainPoint, 2> knee;
  std::array<ChainPoint, 2> foot;
};

inline Chains make_chains(const PhysicsConfig& c) {
  Chains ch;
  ch.com[kHull] = {};
  const std::array<Link, 2> thighs = {kThigh1, kThigh2};
  const std::array<Link, 2> shanks = {kShank1, kShank2};
  for (std::size_t leg = 0; leg < 2; ++leg) {
    ch.com[thighs[leg]] = {{c.hip_offset, 0.5 * c.thigh_length, 0.0}, {kHull, thighs[leg], kHull}, 2};
    ch.com[shanks[leg]] = {{c.hip_offset, c.thigh_length, 0.5 * c.shank_length},
                           {kHull, thighs[leg], shanks[leg]},
                           3};
    ch.knee[leg] = {{c.hip_offset, c.thigh_length, 0.0}, {kHull, thighs[leg], kHull}, 2};
    ch.foot[leg] = {{c.hip_offset, c.thigh_length, c.shank_length}, {kHull, thighs[leg], shanks[leg]}, 3};
  }
  return ch;
}

struct Jacobian2 {
  Vec x{};
  Vec y{};
};

}  // namespace detail

// Dense 7x7 helpers; the walker never needs anything larger.
struct Mat {
  std::array<double, kDof * kDof> a{};
  double& operator()(std::size_t i, std::size_t j) { return a[i * kDof + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * kDof + j]; }
};

// In-place Cholesky factor L (lower) of an SPD matrix; solve with cholesky_solve.
inline void cholesky_factor(Mat& m) {
  for (std::size_t j = 0; j < kDof; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= m(j, k) * m(j, k);
    if (!(d > 0.0)) throw DivergenceError("walker mass matrix is not positive definite");
    d = std::sqrt(d);
    m(j, j) = d;
    for (std::size_t i = j + 1; i < kDof; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= m(i, k) * m(j, k);
      m(i, j) = s / d;
    }
  }
}

inline Vec cholesky_solve(const Mat& l, Vec b) {
  for (std::size_t i = 0; i < kDof; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l(i, k) * b[k];
    b[i] /= l(i, i);
  }
  for (std::size_t ii = kDof; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < kDof; ++k) b[ii] -= l(k, ii) * b[k];
    b[ii] /= l(ii, ii);
  }
  return b;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kDof; ++i) s += a[i] * b[i];
  return s;
}

// Kinematics, mass matrix and constraint solver for one walker configuration.
class WalkerModel {
 public:
  explicit WalkerModel(const PhysicsConfig& cfg) : cfg_(cfg), chains_(detail::make_chains(cfg)) {
    mass_ = {cfg.hull_mass, cfg.thigh_mass, cfg.shank_mass, cfg.thigh_mass, cfg.shank_mass};
    const double hull_box = cfg.hull_mass * (cfg.hull_width * cfg.hull_width + cfg.hull_height * cfg.hull_height) / 12.0;
    inertia_ = {cfg.hull_inertia > 0.0 ? cfg.hull_inertia : hull_box,
                cfg.thigh_mass * cfg.thigh_length * cfg.thigh_length / 12.0,
                cfg.shank_mass * cfg.shank_length * cfg.shank_length / 12.0,
                cfg.thigh_mass * cfg.thigh_length * cfg.thigh_length / 12.0,
                cfg.shank_mass * cfg.shank_length * cfg.shank_length / 12.0};
  }

  const PhysicsConfig& config() const { return cfg_; }

  static std::array<double, kLinks> link_angles(const Vec& q) {
    std::array<double, kLinks> a{};
    for (std::size_t l = 0; l < kLinks; ++l) {
      const auto& s = detail::kSelectors[l];
      for (std::size_t k = 0; k < s.n; ++k) a[l] += q[s.coords[k]];
    }
    return a;
  }

  static std::array<double, kLinks> link_rates(const Vec& v) { return link_angles(v); }

  static Vec2 point(const detail::ChainPoint& p, const Vec& q, const std::array<double, kLinks>& ang) {
    Vec2 out{q[kX], q[kY]};
    for (std::size_t k = 0; k < p.n; ++k) {
      const auto d = detail::down(ang[p.link[k]]);
      out.x += p.length[k] * d.x;
      out.y += p.length[k] * d.y;
    }
    return out;
  }

  static detail::Jacobian2 jacobian(const detail::ChainPoint& p, const std::array<double, kLinks>& ang) {
    detail::Jacobian2 j;
    j.x[kX] = 1.0;
    j.y[kY] = 1.0;
    for (std::size_t k = 0; k < p.n; ++k) {
      const auto dp = detail::down_prime(ang[p.link[k]]);
      const auto& s = detail::kSelectors[p.link[k]];
      for (std::size_t c = 0; c < s.n; ++c) {
        j.x[s.coords[c]] += p.length[k] * dp.x;
        j.y[s.coords[c]] += p.length[k] * dp.y;
      }
    }
    return j;
  }

  // Velocity-product acceleration of the point (Jdot * qdot).
  static Vec2 bias(const detail::ChainPoint& p, const std::array<double, kLinks>& ang,
                   const std::array<double, kLinks>& rate) {
    Vec2 b;
    for (std::size_t k = 0; k < p.n; ++k) {
      const auto d = detail::down(ang[p.link[k]]);
      const double w = rate[p.link[k]];
      b.x -= p.length[k] * w * w * d.x;
      b.y -= p.length[k] * w * w * d.y;
    }
    return b;
  }

  Vec2 foot(const Vec& q, std::size_t leg) const { return point(chains_.foot[leg], q, link_angles(q)); }
  Vec2 knee(const Vec& q, std::size_t leg) const { return point(chains_.knee[leg], q, link_angles(q)); }
  Vec2 hip(const Vec& q) const {
    const auto d = detail::down(q[kHullAngle]);
    return {q[kX] + cfg_.hip_offset * d.x, q[kY] + cfg_.hip_offset * d.y};
  }

  std::array<Pose, kLinks> link_poses(const Vec& q) const {
    const auto ang = link_angles(q);
    std::array<Pose, kLinks> poses;
    for (std::size_t l = 0; l < kLinks; ++l) {
      const auto c = point(chains_.com[l], q, ang);
      poses[l] = {c.x, c.y, ang[l]};
    }
    return poses;
  }

  std::array<Vec2, 4> hull_corners(const Vec& q) const {
    const double c = std::cos(q[kHullAngle]);
    const double s = std::sin(q[kHullAngle]);
    const double hw = 0.5 * cfg_.hull_width;
    const double hh = 0.5 * cfg_.hull_height;
    std::array<Vec2, 4> out;
    const std::array<Vec2, 4> local = {{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
    for (std::size_t i = 0; i < 4; ++i) {
      out[i] = {q[kX] + c * local[i].x - s * local[i].y, q[kY] + s * local[i].x + c * local[i].y};
    }
    return out;
  }

  Mat mass_matrix(const Vec& q) const {
    const auto ang = link_angles(q);
    Mat m;
    for (std::size_t l = 0; l < kLinks; ++l) {
      const auto j = jacobian(chains_.com[l], ang);
      const auto& s = detail::kSelectors[l];
      for (std::size_t r = 0; r < kDof; ++r) {
        for (std::size_t c = r; c < kDof; ++c) m(r, c) += mass_[l] * (j.x[r] * j.x[c] + j.y[r] * j.y[c]);
      }
      for (std::size_t a = 0; a < s.n; ++a) {
        for (std::size_t b = 0; b < s.n; ++b) {
          const std::size_t r = s.coords[a];
          const std::size_t c = s.coords[b];
          if (r <= c) m(r, c) += inertia_[l];
        }
      }
    }
    for (std::size_t r = 0; r < kDof; ++r) {
      for (std::size_t c = 0; c < r; ++c) m(r, c) = m(c, r);
    }
    return m;
  }

  // Gravity plus velocity-product generalized forces.
  Vec smooth_forces(const Vec& q, const Vec& v) const {
    const auto ang = link_angles(q);
    const auto rate = link_rates(v);
    Vec f{};
    for (std::size_t l = 0; l < kLinks; ++l) {
      const auto j = jacobian(chains_.com[l], ang);
      const auto b = bias(chains_.com[l], ang, rate);
      const double fx = -mass_[l] * b.x;
      const double fy = -mass_[l] * (cfg_.gravity + b.y);
      for (std::size_t i = 0; i < kDof; ++i) f[i] += j.x[i] * fx + j.y[i] * fy;
    }
    return f;
  }

  double kinetic_energy(const Vec& q, const Vec& v) const {
    const Mat m = mass_matrix(q);
    double e = 0.0;
    for (std::size_t r = 0; r < kDof; ++r) {
      for (std::size_t c = 0; c < kDof; ++c) e += v[r] * m(r, c) * v[c];
    }
    return 0.5 * e;
  }

  double potential_energy(const Vec& q) const {
    const auto ang = link_angles(q);
    double e = 0.0;
    for (std::size_t l = 0; l < kLinks; ++l) e += mass_[l] * cfg_.gravity * point(chains_.com[l], q, ang).y;
    return e;
  }

  double total_mass() const {
    double m = 0.0;
    for (double x : mass_) m += x;
    return m;
  }

  const detail::Chains& chains() const { return chains_; }

 private:
  PhysicsConfig cfg_;
  detail::Chains chains_;
  std::array<double, kLinks> mass_{};
  std::array<double, kLinks> inertia_{};
};

// Signed distance of a foot point above the local terrain line.
inline double ground_gap(const Terrain& terrain, Vec2 p) {
  const double s = terrain.slope_at(p.x);
  return (p.y - terrain.height_at(p.x)) / std::sqrt(1.0 + s * s);
}

namespace detail {

struct ConstraintRow {
  Vec j{};
  Vec w{};  // M^-1 j
  double diag = 0.0;
  double target = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double lambda = 0.0;
  std::size_t slot = 0;
  int normal_row = -1;  // friction rows: index of their normal row
  double mu = 0.0;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace detail

namespace detail {

inline void swap_legs(WalkerState& s, std::array<double, 4>& cmd) {
  std::swap(s.q[kHip1], s.q[kHip2]);
  std::swap(s.q[kKnee1], s.q[kKnee2]);
  std::swap(s.v[kHip1], s.v[kHip2]);
  std::swap(s.v[kKnee1], s.v[kKnee2]);
  std::swap(s.foot_contact[0], s.foot_contact[1]);
  for (std::size_t base : {kMotorSlot, kLowerLimitSlot, kUpperLimitSlot}) {
    std::swap(s.impulses[base], s.impulses[base + 2]);
    std::swap(s.impulses[base + 1], s.impulses[base + 3]);
  }
  std::swap(s.impulses[kTangentSlot], s.impulses[kTangentSlot + 1]);
  std::swap(s.impulses[kNormalSlot], s.impulses[kNormalSlot + 1]);
  std::swap(cmd[0], cmd[2]);
  std::swap(cmd[1], cmd[3]);
}

// True when leg 2 should be processed first. Comparing everything a leg owns
// makes the solve order a function of the physical state, not of the labels.
inline bool legs_out_of_order(const WalkerState& s, const std::array<double, 4>& cmd) {
  const std::array<double, 10> a = {s.q[kHip1],           s.q[kKnee1],           s.v[kHip1],
                                    s.v[kKnee1],          cmd[0],                cmd[1],
                                    s.impulses[kNormalSlot], s.impulses[kTangentSlot],
                                    s.impulses[kMotorSlot], s.impulses[kMotorSlot + 1]};
  const std::array<double, 10> b = {s.q[kHip2],           s.q[kKnee2],           s.v[kHip2],
                                    s.v[kKnee2],          cmd[2],                cmd[3],
                                    s.impulses[kNormalSlot + 1], s.impulses[kTangentSlot + 1],
                                    s.impulses[kMotorSlot + 2], s.impulses[kMotorSlot + 3]};
  return b < a;
}

}  // namespace detail

// Advances one control step: cfg.substeps substeps of velocity-level
// integration with servo motors, joint limits and frictional foot contacts
// solved together by projected Gauss-Seidel. Positions advance by
// h*v_new - h^2/2 * a_smooth, which is exact for constant smooth
// acceleration (ballistic flight conserves energy to rounding).
inline WalkerState physics_step(const WalkerModel& model, const WalkerState& state, const Terrain& terrain,
                                std::span<const double> torques) {
  const PhysicsConfig& cfg = model.config();
  const double h = cfg.substep();
  std::array<double, 4> cmd{};
  for (std::size_t i = 0; i < 4; ++i) cmd[i] = std::clamp(torques[i], -1.0, 1.0);

  WalkerState s = state;
  std::array<detail::ConstraintRow, 16> rows;

  for (int sub = 0; sub < cfg.substeps; ++sub) {
    const bool swapped = detail::legs_out_of_order(s, cmd);
    if (swapped) detail::swap_legs(s, cmd);
    Mat l = model.mass_matrix(s.q);
    cholesky_factor(l);
    const Vec f = model.smooth_forces(s.q, s.v);
    const Vec acc = cholesky_solve(l, f);

    std::size_t n = 0;
    auto add_row = [&](std::size_t slot, const Vec& j, double target, double lo, double hi) -> std::size_t {
      auto& r = rows[n];
      r = {};
      r.j = j;
      r.target = target;
      r.lo = lo;
      r.hi = hi;
      r.slot = slot;
      return n++;
    };

    // Servo motors.
    for (std::size_t m = 0; m < 4; ++m) {
      if (cmd[m] == 0.0) continue;
      const std::size_t coord = kHip1 + m;
      const bool is_hip = (coord == kHip1 || coord == kHip2);
      const double speed = is_hip ? cfg.hip_speed : cfg.knee_speed;
      const double cap = std::abs(cmd[m]) * cfg.motor_torque * h;
      Vec j{};
      j[coord] = 1.0;
      add_row(kMotorSlot + m, j, std::copysign(speed, cmd[m]), -cap, cap);
    }

    // Joint limits as one-sided position constraints on the end-of-substep angle.
    for (std::size_t coord = kHip1; coord <= kKnee2; ++coord) {
      const bool is_hip = (coord == kHip1 || coord == kHip2);
      const double lo = is_hip ? cfg.hip_min : cfg.knee_min;
      const double hi = is_hip ? cfg.hip_max : cfg.knee_max;
      const double q = s.q[coord];
      const double reach = 0.05 + std::abs(s.v[coord]) * h * 2.0;
      if (q - lo < reach) {
        Vec j{};
        j[coord] = 1.0;
        add_row(kLowerLimitSlot + coord - kHip1, j, (lo - q) / h + 0.5 * h * acc[coord], 0.0, detail::kInf);
      }
      if (hi - q < reach) {
        Vec j{};
        j[coord] = -1.0;
        add_row(kUpperLimitSlot + coord - kHip1, j, (q - hi) / h - 0.5 * h * acc[coord], 0.0, detail::kInf);
      }
    }

    // Foot contacts: tangential rows first so the normal rows are solved last.
    const auto ang = WalkerModel::link_angles(s.q);
    std::array<std::size_t, 2> tangent_rows{};
    std::array<bool, 2> active{};
    std::array<detail::Jacobian2, 2> foot_jac;
    std::array<Vec2, 2> normals;
    std::array<double, 2> gaps{};
    for (std::size_t leg = 0; leg < 2; ++leg) {
      const auto& chain = model.chains().foot[leg];
      const Vec2 p = WalkerModel::point(chain, s.q, ang);
      gaps[leg] = ground_gap(terrain, p);
      foot_jac[leg] = WalkerModel::jacobian(chain, ang);
      const double slope = terrain.slope_at(p.x);
      const double norm = std::sqrt(1.0 + slope * slope);
      normals[leg] = {-slope / norm, 1.0 / norm};
      Vec jn{};
      for (std::size_t i = 0; i < kDof; ++i) {
        jn[i] = normals[leg].x * foot_jac[leg].x[i] + normals[leg].y * foot_jac[leg].y[i];
      }
      const double approach = -dot(jn, s.v) * h;
      active[leg] = gaps[leg] < 0.02 + std::max(0.0, 2.0 * approach);
      if (active[leg]) {
        const Vec2 t{normals[leg].y, -normals[leg].x};
        Vec jt{};
        for (std::size_t i = 0; i < kDof; ++i) jt[i] = t.x * foot_jac[leg].x[i] + t.y * foot_jac[leg].y[i];
        tangent_rows[leg] = add_row(kTangentSlot + leg, jt, 0.5 * h * dot(jt, acc), 0.0, 0.0);
      }
    }
    for (std::size_t leg = 0; leg < 2; ++leg) {
      if (!active[leg]) continue;
      Vec jn{};
      for (std::size_t i = 0; i < kDof; ++i) {
        jn[i] = normals[leg].x * foot_jac[leg].x[i] + normals[leg].y * foot_jac[leg].y[i];
      }
      const double g = gaps[leg];
      const double correction = g >= 0.0 ? -g / h : -0.2 * g / h;
      const std::size_t nr = add_row(kNormalSlot + leg, jn, correction + 0.5 * h * dot(jn, acc), 0.0, detail::kInf);
      rows[tangent_rows[leg]].normal_row = static_cast<int>(nr);
      rows[tangent_rows[leg]].mu = cfg.friction;
    }

    Vec v = s.v;
    for (std::size_t i = 0; i < kDof; ++i) v[i] += h * acc[i];
    for (std::size_t r = 0; r < n; ++r) {
      rows[r].w = cholesky_solve(l, rows[r].j);
      rows[r].diag = dot(rows[r].j, rows[r].w);
    }
    // Warm start: normal rows are appended after their friction rows, so
    // clamp friction against the cached normal impulse directly.
    for (std::size_t r = 0; r < n; ++r) {
      auto& row = rows[r];
      double lo = row.lo;
      double hi = row.hi;
      if (row.normal_row >= 0) {
        hi = row.mu * std::max(0.0, s.impulses[rows[static_cast<std::size_t>(row.normal_row)].slot]);
        lo = -hi;
      }
      row.lambda = std::clamp(s.impulses[row.slot], lo, hi);
      for (std::size_t i = 0; i < kDof; ++i) v[i] += row.lambda * row.w[i];
    }

    for (int it = 0; it < cfg.solver_iterations; ++it) {
      double largest = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        auto& row = rows[r];
        double lo = row.lo;
        double hi = row.hi;
        if (row.normal_row >= 0) {
          hi = row.mu * rows[static_cast<std::size_t>(row.normal_row)].lambda;
          lo = -hi;
        }
        const double residual = row.target - dot(row.j, v);
        const double next = std::clamp(row.lambda + residual / row.diag, lo, hi);
        const double delta = next - row.lambda;
        if (delta == 0.0) continue;
        row.lambda = next;
        largest = std::max(largest, std::abs(delta));
        for (std::size_t i = 0; i < kDof; ++i) v[i] += delta * row.w[i];
      }
      if (largest < cfg.solver_tolerance) break;
    }

    for (std::size_t i = 0; i < kDof; ++i) {
      s.q[i] += h * v[i] - 0.5 * h * h * acc[i];
    }
    s.v = v;

    s.impulses = {};
    for (std::size_t r = 0; r < n; ++r) s.impulses[rows[r].slot] = rows[r].lambda;

    // Hard clamp of any residual limit violation.
    for (std::size_t coord = kHip1; coord <= kKnee2; ++coord) {
      const bool is_hip = (coord == kHip1 || coord == kHip2);
      const double lo = is_hip ? cfg.hip_min : cfg.knee_min;
      const double hi = is_hip ? cfg.hip_max : cfg.knee_max;
      if (s.q[coord] < lo) {
        s.q[coord] = lo;
        s.v[coord] = std::max(0.0, s.v[coord]);
      } else if (s.q[coord] > hi) {
        s.q[coord] = hi;
        s.v[coord] = std::min(0.0, s.v[coord]);
      }
    }

    // Project any remaining foot penetration out along the mass-weighted normal.
    for (int pass = 0; pass < 3; ++pass) {
      bool moved = false;
      for (std::size_t leg = 0; leg < 2; ++leg) {
        const auto a = WalkerModel::link_angles(s.q);
        const auto& chain = model.chains().foot[leg];
        const Vec2 p = WalkerModel::point(chain, s.q, a);
        const double g = ground_gap(terrain, p);
        if (g >= 0.0) continue;
        const auto jac = WalkerModel::jacobian(chain, a);
        const double slope = terrain.slope_at(p.x);
        const double norm = std::sqrt(1.0 + slope * slope);
        Vec jn{};
        for (std::size_t i = 0; i < kDof; ++i) jn[i] = (-slope * jac.x[i] + jac.y[i]) / norm;
        const Vec w = cholesky_solve(l, jn);
        const double step = -g / dot(jn, w);
        for (std::size_t i = 0; i < kDof; ++i) s.q[i] += step * w[i];
        moved = true;
      }
      if (!moved) break;
    }
    for (std::size_t i = 0; i < kDof; ++i) {
      if (!std::isfinite(s.q[i]) || !std::isfinite(s.v[i])) {
        throw DivergenceError("walker simulation diverged (non-finite state)");
      }
    }
    if (swapped) detail::swap_legs(s, cmd);
  }

  for (std::size_t leg = 0; leg < 2; ++leg) {
    s.foot_contact[leg] = ground_gap(terrain, model.foot(s.q, leg)) <= cfg.contact_tolerance;
  }
  return s;
}

}  // namespace walkrl::walker
