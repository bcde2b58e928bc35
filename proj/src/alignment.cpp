#include "lof/alignment.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace lof {

TemplatePatch extract_template(const Image& img_l, const Vec2& p_l,
                               const Mat2& warp, int half_window) {
  if (std::abs(warp.determinant()) < 1e-12)
    throw SingularWarp("template warp is not invertible");
  const Mat2 warp_inv = warp.inverse();
  const Mat2 grad_map = warp_inv.transpose();

  TemplatePatch tpl;
  tpl.center_l = p_l;
  tpl.half_window = half_window;
  const int side = tpl.side();
  tpl.values.resize(static_cast<size_t>(side) * side);
  tpl.gradients.resize(static_cast<size_t>(side) * side);
  size_t k = 0;
  for (int hv = -half_window; hv <= half_window; ++hv) {
    for (int hu = -half_window; hu <= half_window; ++hu, ++k) {
      const Vec2 pos = p_l + warp_inv * Vec2(hu, hv);
      tpl.values[k] = sample_bilinear(img_l, pos);
      const GradientInfo g = gradient_at(img_l, pos);
      tpl.gradients[k] = grad_map * Vec2(g.g_u, g.g_v);
    }
  }
  return tpl;
}

namespace {

// Photometric rows need every window sample inside the image.
bool window_inside(const Image& img, const Vec2& p, int half_window) {
  return img.contains(p, static_cast<double>(half_window));
}

detail::DofLayout layout_dofs(const LevelState& state,
                              const std::vector<int>& active) {
  detail::DofLayout lay;
  lay.offset.reserve(active.size());
  int off = 0;
  for (int idx : active) {
    lay.offset.push_back(off);
    off +=
        state.points[static_cast<size_t>(idx)].cls == PointClass::Corner ? 2
                                                                         : 1;
  }
  lay.n_dofs = off + 2;
  return lay;
}

}  // namespace

namespace detail {

double state_cost(const Image& img_c, const LevelState& state,
                  const std::vector<int>& active, double structural_weight) {
  double cost = 0.0;
  const double sqrt_w = std::sqrt(structural_weight);
  for (int idx : active) {
    const WorkPoint& wp = state.points[static_cast<size_t>(idx)];
    const TemplatePatch& tpl =
        state.templates[static_cast<size_t>(wp.template_index)];
    const int w = tpl.half_window;
    size_t k = 0;
    for (int hv = -w; hv <= w; ++hv) {
      for (int hu = -w; hu <= w; ++hu, ++k) {
        const double r =
            tpl.values[k] - sample_bilinear(img_c, wp.pos_c + Vec2(hu, hv));
        cost += r * r;
      }
    }
    const double rs = sqrt_w * state.line.signed_distance(wp.pos_c);
    cost += rs * rs;
  }
  return cost;
}

NormalSystem assemble_system(const Image& img_c, const LevelState& state,
                             const std::vector<int>& active,
                             double structural_weight) {
  NormalSystem sys;
  sys.layout = layout_dofs(state, active);
  sys.normal = state.line.normal();
  const int n = sys.layout.n_dofs;
  sys.hessian = Eigen::MatrixXd::Zero(n, n);
  sys.gradient = Eigen::VectorXd::Zero(n);
  const int bi = n - 2;  // beta column
  const int di = n - 1;  // d column
  const double sqrt_w = std::sqrt(structural_weight);
  const Vec2 dn(-std::sin(state.line.beta), std::cos(state.line.beta));

  for (size_t a = 0; a < active.size(); ++a) {
    const WorkPoint& wp = state.points[static_cast<size_t>(active[a])];
    const TemplatePatch& tpl =
        state.templates[static_cast<size_t>(wp.template_index)];
    const int off = sys.layout.offset[a];
    const bool corner = wp.cls == PointClass::Corner;
    const int w = tpl.half_window;

    size_t k = 0;
    for (int hv = -w; hv <= w; ++hv) {
      for (int hu = -w; hu <= w; ++hu, ++k) {
        const double r =
            tpl.values[k] - sample_bilinear(img_c, wp.pos_c + Vec2(hu, hv));
        sys.cost += r * r;
        const Vec2& g = tpl.gradients[k];
        // Inverse-compositional photometric Jacobian: -grad T per point dof.
        if (corner) {
          sys.hessian(off, off) += g.x() * g.x();
          sys.hessian(off, off + 1) += g.x() * g.y();
          sys.hessian(off + 1, off + 1) += g.y() * g.y();
          sys.gradient(off) += -g.x() * r;
          sys.gradient(off + 1) += -g.y() * r;
        } else {
          const double gs = g.dot(sys.normal);
          sys.hessian(off, off) += gs * gs;
          sys.gradient(off) += -gs * r;
        }
      }
    }

    const double rs = sqrt_w * state.line.signed_distance(wp.pos_c);
    sys.cost += rs * rs;
    const double jb = sqrt_w * dn.dot(wp.pos_c);
    const double jd = -sqrt_w;
    if (corner) {
      const Vec2 jp = sqrt_w * sys.normal;
      sys.hessian(off, off) += jp.x() * jp.x();
      sys.hessian(off, off + 1) += jp.x() * jp.y();
      sys.hessian(off + 1, off + 1) += jp.y() * jp.y();
      sys.hessian(off, bi) += jp.x() * jb;
      sys.hessian(off + 1, bi) += jp.y() * jb;
      sys.hessian(off, di) += jp.x() * jd;
      sys.hessian(off + 1, di) += jp.y() * jd;
      sys.gradient(off) += jp.x() * rs;
      sys.gradient(off + 1) += jp.y() * rs;
    } else {
      const double jp = sqrt_w;  // sqrt_w * normal . normal
      sys.hessian(off, off) += jp * jp;
      sys.hessian(off, bi) += jp * jb;
      sys.hessian(off, di) += jp * jd;
      sys.gradient(off) += jp * rs;
    }
    sys.hessian(bi, bi) += jb * jb;
    sys.hessian(bi, di) += jb * jd;
    sys.hessian(di, di) += jd * jd;
    sys.gradient(bi) += jb * rs;
    sys.gradient(di) += jd * rs;
  }

  sys.hessian =
      Eigen::MatrixXd(sys.hessian.selfadjointView<Eigen::Upper>());
  return sys;
}

Eigen::VectorXd solve_increment(const NormalSystem& sys) {
  const double scale = std::max(1.0, sys.gradient.norm());
  double damping = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd h = sys.hessian;
    if (damping > 0.0) h.diagonal() += damping * h.diagonal().cwiseMax(1.0);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd delta = ldlt.solve(-sys.gradient);
      if (delta.allFinite() &&
          (h * delta + sys.gradient).norm() <= 1e-8 * scale)
        return delta;
    }
    damping = damping == 0.0 ? 1e-3 : damping * 10.0;
  }
  throw SingularSystem(
      "alignment normal equations stayed singular under damping");
}

}  // namespace detail

namespace {

struct AppliedState {
  LevelState state;
  std::vector<double> point_updates;  // per entry of `active`
  double d_beta = 0.0;
  double d_d = 0.0;
};

AppliedState apply_increment(const LevelState& state,
                             const std::vector<int>& active,
                             const detail::NormalSystem& sys,
                             const Eigen::VectorXd& delta, double step) {
  AppliedState out;
  out.state = state;
  out.point_updates.resize(active.size());
  for (size_t a = 0; a < active.size(); ++a) {
    WorkPoint& wp = out.state.points[static_cast<size_t>(active[a])];
    const int off = sys.layout.offset[a];
    if (wp.cls == PointClass::Corner) {
      const Vec2 d(step * delta(off), step * delta(off + 1));
      wp.pos_c += d;
      out.point_updates[a] = d.norm();
    } else {
      const double d = step * delta(off);
      wp.pos_c += d * sys.normal;
      out.point_updates[a] = std::abs(d);
    }
  }
  out.d_beta = step * delta(sys.layout.n_dofs - 2);
  out.d_d = step * delta(sys.layout.n_dofs - 1);
  out.state.line = NormalLine::canonical(state.line.beta + out.d_beta,
                                         state.line.d + out.d_d);
  return out;
}

bool eq8_holds(const Vec2& p, const NormalLine& line, const Image& img,
               const SamplingConfig& cfg) {
  if (!img.contains(p, 2.0)) return false;
  return is_appropriate(p, line.alpha(), img, cfg);
}

std::vector<int> collect_active(const LevelState& state, AlignPhase phase) {
  std::vector<int> active;
  for (size_t i = 0; i < state.points.size(); ++i) {
    const WorkPoint& wp = state.points[i];
    if (!wp.usable || wp.failed) continue;
    if (phase == AlignPhase::Second && !wp.converged) continue;
    active.push_back(static_cast<int>(i));
  }
  return active;
}

}  // namespace

LevelOutcome align_one_level(const Image& img_l, const Image& img_c,
                             LevelState& state, const AlignConfig& cfg,
                             AlignPhase phase, int level,
                             const DiagnosticsSink& diag) {
  (void)img_l;  // templates were extracted up front; only I_c is resampled
  LevelOutcome out;
  // Full-convergence termination applies to the second step always, and to
  // the first when the second is disabled (single-step mode).
  const bool full_convergence = phase == AlignPhase::Second || !cfg.two_step;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    out.iterations = iter;
    for (int idx : collect_active(state, phase)) {
      WorkPoint& wp = state.points[static_cast<size_t>(idx)];
      if (!window_inside(img_c, wp.pos_c, cfg.half_window)) wp.failed = true;
    }
    const std::vector<int> active = collect_active(state, phase);
    if (static_cast<int>(active.size()) < 3) {
      out.failure = AlignFailure::TooFewPoints;
      return out;
    }

    detail::NormalSystem sys;
    Eigen::VectorXd delta;
    try {
      sys = detail::assemble_system(img_c, state, active,
                                    cfg.structural_weight);
      delta = detail::solve_increment(sys);
    } catch (const SingularSystem&) {
      out.failure = AlignFailure::SingularSystem;
      return out;
    }

    bool accepted = false;
    bool point_dropped = false;
    double accepted_cost = sys.cost;
    AppliedState next;
    double step = 1.0;
    for (int half = 0; half <= 5 && !accepted; ++half) {
      next = apply_increment(state, active, sys, delta, step);
      for (int idx : active) {
        const WorkPoint& wp = next.state.points[static_cast<size_t>(idx)];
        if (!window_inside(img_c, wp.pos_c, cfg.half_window)) {
          // The point wandered out; drop it and restart from a fresh system.
          state.points[static_cast<size_t>(idx)].failed = true;
          point_dropped = true;
          break;
        }
      }
      if (point_dropped) break;
      const double new_cost =
          detail::state_cost(img_c, next.state, active, cfg.structural_weight);
      if (new_cost <= sys.cost) {
        accepted = true;
        accepted_cost = new_cost;
      } else {
        step *= 0.5;
      }
    }
    if (point_dropped) continue;

    if (accepted) {
      state = next.state;
    } else {
      // Stalled: no step reduced the cost. Evaluate termination with zero
      // updates rather than forcing an uphill move.
      next.point_updates.assign(active.size(), 0.0);
      next.d_beta = 0.0;
      next.d_d = 0.0;
    }

    int n_converged = 0;
    bool terminate = false;
    if (full_convergence) {
      bool all_small = std::abs(next.d_beta) < cfg.beta_epsilon &&
                       std::abs(next.d_d) < cfg.d_epsilon;
      for (size_t a = 0; a < active.size(); ++a) {
        if (next.point_updates[a] < cfg.point_epsilon)
          ++n_converged;
        else
          all_small = false;
      }
      terminate = all_small;
    } else {
      for (size_t a = 0; a < active.size(); ++a) {
        WorkPoint& wp = state.points[static_cast<size_t>(active[a])];
        wp.converged = next.point_updates[a] < cfg.point_epsilon &&
                       eq8_holds(wp.pos_c, state.line, img_c, cfg.sampling);
        if (wp.converged) ++n_converged;
      }
      terminate = n_converged >= cfg.convergence_fraction *
                                     static_cast<double>(active.size());
    }
    if (diag)
      diag({level, phase == AlignPhase::First ? 1 : 2, iter, accepted_cost,
            state.line.beta, state.line.d, n_converged});
    if (terminate) return out;
    if (!accepted) {
      // A stalled iteration that does not terminate cannot make progress.
      out.failure = AlignFailure::MaxIterations;
      return out;
    }
  }
  out.failure = AlignFailure::MaxIterations;
  return out;
}

namespace {

// Availability and quality screen for one point entering a level.
void screen_point(WorkPoint& wp, const Image& img_l, const Image& img_c,
                  const Mat2& warp, const AlignConfig& cfg, int level) {
  wp.usable = false;
  wp.converged = false;
  wp.template_index = -1;
  if (wp.failed) return;
  if (!img_c.contains(wp.pos_c, cfg.half_window + 2.0)) return;
  if (!img_l.contains(wp.pos_l, 4.5)) return;
  const Mat2 warp_inv = warp.inverse();
  const double w = cfg.half_window;
  for (const Vec2& corner :
       {Vec2(-w, -w), Vec2(w, -w), Vec2(-w, w), Vec2(w, w)}) {
    if (!img_l.contains(wp.pos_l + warp_inv * corner, 2.0)) return;
  }
  if (level == 0 && cfg.high_eigen_filter) {
    const StructureTensor st = structure_tensor(img_l, wp.pos_l, 3);
    if (st.lambda_min >= cfg.high_eigen_factor * cfg.sampling.corner_lambda_min)
      return;
  }
  wp.cls = classify_point(wp.pos_l, img_l, cfg.sampling);
  if (wp.cls == PointClass::Reject) return;
  wp.usable = true;
}

AlignResult failed_result(const LevelState& state, double level_scale,
                          AlignFailure reason) {
  AlignResult res;
  res.line_c =
      NormalLine::canonical(state.line.beta, state.line.d * level_scale);
  res.failure_reason = reason;
  for (const WorkPoint& wp : state.points) {
    SamplePoint sp;
    sp.pos_l = wp.pos_l * level_scale;
    sp.pos_c = project_point_to_line(wp.pos_c * level_scale, res.line_c);
    sp.cls = wp.cls;
    sp.status = PointStatus::Failed;
    res.points_c.push_back(sp);
  }
  return res;
}

}  // namespace

AlignResult pyramidal_align(const Pyramid& pyr_l, const Pyramid& pyr_c,
                            const NormalLine& line_l,
                            const std::vector<SamplePoint>& points,
                            const AlignInit& init, const AlignConfig& cfg,
                            const DiagnosticsSink& diag) {
  if (pyr_l.height() != pyr_c.height() || pyr_l.scale() != pyr_c.scale())
    throw Error("pyramids disagree in scale or height");
  if (init.points_c.size() != points.size())
    throw Error("init supplies " + std::to_string(init.points_c.size()) +
                " positions for " + std::to_string(points.size()) + " points");
  if (std::abs(init.warp.determinant()) < 1e-12)
    throw SingularWarp("alignment warp is not invertible");
  (void)line_l;  // the template-side line is implicit in the sampled points

  const int levels = pyr_l.height();
  const double s = pyr_l.scale();
  const double deepest = std::pow(s, levels - 1);

  AlignResult res;
  LevelState state;
  state.line = NormalLine::canonical(init.line_c.beta, init.line_c.d / deepest);
  state.points.resize(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    state.points[i].pos_c = init.points_c[i] / deepest;
    state.points[i].cls = points[i].cls;
  }

  for (int level = levels - 1; level >= 0; --level) {
    const Image& img_l = pyr_l.level(level);
    const Image& img_c = pyr_c.level(level);
    const double level_scale = std::pow(s, level);

    state.templates.clear();
    for (size_t i = 0; i < state.points.size(); ++i) {
      WorkPoint& wp = state.points[i];
      wp.pos_l = points[i].pos_l / level_scale;
      screen_point(wp, img_l, img_c, init.warp, cfg, level);
      if (!wp.usable) continue;
      try {
        state.templates.push_back(
            extract_template(img_l, wp.pos_l, init.warp, cfg.half_window));
        wp.template_index = static_cast<int>(state.templates.size()) - 1;
      } catch (const OutOfBounds&) {
        wp.usable = false;
      }
    }

    const std::vector<int> usable = collect_active(state, AlignPhase::First);
    if (static_cast<int>(usable.size()) < 3) {
      if (level == 0)
        return failed_result(state, level_scale, AlignFailure::TooFewPoints);
      // Border margins can swallow the whole line at a coarse level; skip
      // the level and let the finer ones do the work.
      for (WorkPoint& wp : state.points) wp.pos_c *= s;
      state.line = NormalLine::canonical(state.line.beta, state.line.d * s);
      continue;
    }

    const LevelOutcome first = align_one_level(img_l, img_c, state, cfg,
                                               AlignPhase::First, level, diag);
    res.first_step_iterations += first.iterations;
    if (first.failure) return failed_result(state, level_scale, *first.failure);

    if (cfg.two_step) {
      const LevelOutcome second = align_one_level(
          img_l, img_c, state, cfg, AlignPhase::Second, level, diag);
      res.second_step_iterations += second.iterations;
      if (second.failure)
        return failed_result(state, level_scale, *second.failure);
    }

    if (level > 0) {
      for (WorkPoint& wp : state.points) wp.pos_c *= s;
      state.line = NormalLine::canonical(state.line.beta, state.line.d * s);
    }
  }

  // Final acceptance at the original level: points that satisfy the
  // gradient-validity criterion against the tracked line are the output
  // tracked set; everything else is projected onto the line and retired.
  res.line_c = state.line;
  const Image& img_c0 = pyr_c.level(0);
  int n_passed = 0;
  for (const WorkPoint& wp : state.points) {
    SamplePoint sp;
    sp.pos_l = wp.pos_l;
    sp.cls = wp.cls;
    const bool pass = wp.usable && !wp.failed &&
                      eq8_holds(wp.pos_c, res.line_c, img_c0, cfg.sampling);
    if (pass) {
      sp.status = PointStatus::Converged;
      sp.pos_c = wp.pos_c;
      ++n_passed;
    } else {
      sp.status = PointStatus::Failed;
      sp.pos_c = project_point_to_line(wp.pos_c, res.line_c);
    }
    res.points_c.push_back(sp);
  }
  res.converged_line = n_passed > 0;
  if (!res.converged_line) res.failure_reason = AlignFailure::LineLost;
  return res;
}

}  // namespace lof
