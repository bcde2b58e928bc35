#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lof/image.hpp"
#include "lof/line_geom.hpp"
#include "lof/pyramid.hpp"
#include "lof/sampling.hpp"

namespace lof {

/// Fixed template-side data for one sampled point at one pyramid level.
/// Values are T(h) = I_l(center_l + A^-1 h) on the integer lattice
/// h in [-W, W]^2; gradients are the inverse-compositional Jacobian factors
/// A^-T grad I_l at the same warped locations. Both stay constant across
/// iterations.
struct TemplatePatch {
  Vec2 center_l = Vec2::Zero();
  int half_window = 10;
  std::vector<double> values;
  std::vector<Vec2> gradients;

  int side() const { return 2 * half_window + 1; }
};

TemplatePatch extract_template(const Image& img_l, const Vec2& p_l,
                               const Mat2& warp, int half_window);

struct AlignConfig {
  int max_iterations = 30;
  double point_epsilon = 0.05;
  double beta_epsilon = 0.002;
  double d_epsilon = 0.05;
  double convergence_fraction = 0.4;
  /// One pixel of perpendicular drift costs as much as one intensity unit of
  /// error per window pixel (21*21 = 441 photometric squares per point).
  double structural_weight = 441.0;
  int half_window = 10;
  double pyramid_scale = 1.5;
  int pyramid_height = 4;
  bool two_step = true;
  /// Drop points whose minimum structure-tensor eigenvalue at the original
  /// level is unusually high (possible occluding object).
  bool high_eigen_filter = true;
  double high_eigen_factor = 10.0;
  SamplingConfig sampling;
};

enum class AlignFailure {
  LineLost,
  TooFewPoints,
  MaxIterations,
  SingularSystem,
};

struct AlignResult {
  NormalLine line_c{0.0, 0.0};
  std::vector<SamplePoint> points_c;
  bool converged_line = false;
  int first_step_iterations = 0;
  int second_step_iterations = 0;
  std::optional<AlignFailure> failure_reason;
};

enum class AlignPhase { First, Second };

/// One per-iteration record for the optional diagnostics stream.
struct IterationRecord {
  int level = 0;
  int phase = 1;
  int iter = 0;
  double cost = 0.0;
  double beta = 0.0;
  double d = 0.0;
  int n_converged = 0;
};

using DiagnosticsSink = std::function<void(const IterationRecord&)>;

/// Mutable per-point state threaded through the level loop. Positions are in
/// the coordinates of the current pyramid level.
struct WorkPoint {
  Vec2 pos_l = Vec2::Zero();
  Vec2 pos_c = Vec2::Zero();
  PointClass cls = PointClass::Edge;
  bool failed = false;
  bool usable = false;
  bool converged = false;
  int template_index = -1;
};

struct LevelState {
  NormalLine line{0.0, 0.0};
  std::vector<WorkPoint> points;
  std::vector<TemplatePatch> templates;
};

struct LevelOutcome {
  std::optional<AlignFailure> failure;
  int iterations = 0;
};

namespace detail {

struct DofLayout {
  std::vector<int> offset;  // per entry of `active`, corner 2 dofs, edge 1
  int n_dofs = 0;           // includes the trailing (beta, d) pair
};

struct NormalSystem {
  Eigen::MatrixXd hessian;   // J^T J
  Eigen::VectorXd gradient;  // J^T r
  double cost = 0.0;
  DofLayout layout;
  Vec2 normal = Vec2::Zero();  // line normal the edge dofs move along
};

/// Photometric plus weighted structural cost of the current state over the
/// active points.
double state_cost(const Image& img_c, const LevelState& state,
                  const std::vector<int>& active, double structural_weight);

/// Normal equations for one Gauss-Newton step; template-side Jacobians come
/// from the stored patches, so only residuals are resampled.
NormalSystem assemble_system(const Image& img_c, const LevelState& state,
                             const std::vector<int>& active,
                             double structural_weight);

/// Solves the step, escalating diagonal damping when the plain system does
/// not solve cleanly. Throws SingularSystem when damping runs out.
Eigen::VectorXd solve_increment(const NormalSystem& sys);

}  // namespace detail

LevelOutcome align_one_level(const Image& img_l, const Image& img_c,
                             LevelState& state, const AlignConfig& cfg,
                             AlignPhase phase, int level,
                             const DiagnosticsSink& diag = nullptr);

/// Initial guess for the current frame: per-point predicted positions, the
/// predicted line, and the local affine approximation A of the inter-frame
/// warp (identity when no prior is available). All in original-image
/// coordinates.
struct AlignInit {
  std::vector<Vec2> points_c;
  NormalLine line_c{0.0, 0.0};
  Mat2 warp = Mat2::Identity();
};

AlignResult pyramidal_align(const Pyramid& pyr_l, const Pyramid& pyr_c,
                            const NormalLine& line_l,
                            const std::vector<SamplePoint>& points,
                            const AlignInit& init, const AlignConfig& cfg,
                            const DiagnosticsSink& diag = nullptr);

}  // namespace lof
