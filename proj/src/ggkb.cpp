#include "idarr/ggkb.hpp"

#include <cmath>
#include <limits>

#include "idarr/errors.hpp"

namespace idarr {

SolutionNorm::SolutionNorm(Kind kind, std::shared_ptr<const LinearMap> map,
                           Vector inverse_weights)
    : kind_(kind), map_(std::move(map)), inverse_weights_(std::move(inverse_weights)) {
  if (!map_) throw GeometryError("SolutionNorm: null operator");
}

SolutionNorm SolutionNorm::rkhs(const RkhsGeometry& geom) {
  return SolutionNorm(Kind::Rkhs, geom.map_ptr(), geom.inverse_weights());
}

SolutionNorm SolutionNorm::weighted(const RkhsGeometry& geom) {
  return SolutionNorm(Kind::Weighted, geom.map_ptr(), geom.inverse_weights());
}

SolutionNorm SolutionNorm::euclidean(std::shared_ptr<const LinearMap> map) {
  return SolutionNorm(Kind::Euclidean, std::move(map), Vector());
}

SolutionNorm::Pinv SolutionNorm::apply_pinv(const Vector& p) const {
  if (p.size() != map_->cols()) throw DimensionError("apply_pinv: bad length");
  Pinv out;
  switch (kind_) {
    case Kind::Rkhs: {
      const Vector y = map_->apply(inverse_weights_.cwiseProduct(p));
      out.quad = y.squaredNorm();
      out.s = inverse_weights_.cwiseProduct(map_->apply_adjoint(y));
      break;
    }
    case Kind::Weighted:
      out.s = inverse_weights_.cwiseProduct(p);
      out.quad = out.s.dot(p);
      break;
    case Kind::Euclidean:
      out.s = p;
      out.quad = p.squaredNorm();
      break;
  }
  return out;
}

SolutionNorm::Chain SolutionNorm::adjoint_pinv(const Vector& w, const Vector& c) const {
  Chain out;
  switch (kind_) {
    case Kind::Rkhs: {
      auto first = map_->adjoint_then_apply(w, c, inverse_weights_);
      out.p = std::move(first.p);
      out.quad = first.y.squaredNorm();
      auto second = map_->adjoint_then_apply(first.y, Vector(), inverse_weights_);
      out.s = inverse_weights_.cwiseProduct(second.p);
      out.as = std::move(second.y);
      break;
    }
    case Kind::Weighted: {
      auto first = map_->adjoint_then_apply(w, c, inverse_weights_);
      out.p = std::move(first.p);
      out.s = inverse_weights_.cwiseProduct(out.p);
      out.quad = out.s.dot(out.p);
      out.as = std::move(first.y);
      break;
    }
    case Kind::Euclidean: {
      auto first = map_->adjoint_then_apply(w, c, Vector::Ones(map_->cols()));
      out.p = std::move(first.p);
      out.s = out.p;
      out.quad = out.p.squaredNorm();
      out.as = std::move(first.y);
      break;
    }
  }
  return out;
}

namespace {

// s^T p must equal the sum-of-squares value; a clearly negative s^T p
// means apply and apply_adjoint are not adjoint to each other.
void check_quadratic_form(const Vector& s, const Vector& p) {
  const double sp = s.dot(p);
  const double tol = static_cast<double>(p.size()) *
                     std::numeric_limits<double>::epsilon() * s.norm() * p.norm();
  if (sp < -tol) {
    throw NumericalBreakdownError("s^T p < 0: operator and adjoint are inconsistent");
  }
}

}  // namespace

GolubKahan::GolubKahan(SolutionNorm norm, const Vector& b, BidiagOptions options)
    : norm_(std::move(norm)), options_(options) {
  const LinearMap& a = norm_.map();
  if (b.size() != a.rows()) throw DimensionError("gGKB: b has wrong length");
  if (options_.reorthogonalize) options_.keep_basis = true;
  tolerance_ = options_.termination_factor *
               static_cast<double>(std::max(a.rows(), a.cols())) *
               std::numeric_limits<double>::epsilon();

  const double beta1 = b.norm();
  if (!std::isfinite(beta1)) throw NumericalBreakdownError("b is not finite");
  if (beta1 == 0.0) throw TrivialDataError("data vector b is zero");
  factors_.betas.push_back(beta1);
  factors_.u.push_back(b / beta1);

  auto chain = norm_.adjoint_pinv(factors_.u.back(), Vector());
  check_quadratic_form(chain.s, chain.p);
  const double alpha1 = std::sqrt(chain.quad);
  if (!(alpha1 > 0.0)) {
    factors_.alphas.push_back(0.0);
    terminate(0);
    return;
  }
  factors_.alphas.push_back(alpha1);
  scale_ = alpha1;
  factors_.z.push_back(chain.s / alpha1);
  factors_.zbar.push_back(chain.p / alpha1);
  az_ = chain.as / alpha1;
}

void GolubKahan::push(std::vector<Vector>& basis, Vector v) {
  if (options_.keep_basis || basis.empty()) {
    basis.push_back(std::move(v));
  } else {
    basis.back() = std::move(v);
  }
}

void GolubKahan::reorthogonalize_u(Vector& r) const {
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vector& u : factors_.u) r -= u.dot(r) * u;
  }
}

void GolubKahan::reorthogonalize_p(Vector& p) const {
  // <p, z_j> equals the C-inner product of M^+ p with z_j, so removing
  // it from p removes the z_j component of s = M^+ p as well.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < factors_.z.size(); ++j) {
      p -= factors_.z[j].dot(p) * factors_.zbar[j];
    }
  }
}

void GolubKahan::terminate(int k_t) {
  factors_.terminated = true;
  factors_.k_t = k_t;
}

StepResult GolubKahan::step() {
  if (factors_.terminated) {
    throw StateError("gGKB step requested after termination at k_t=" +
                     std::to_string(factors_.k_t));
  }
  const LinearMap& a = norm_.map();
  const int i = factors_.steps + 1;
  factors_.steps = i;
  const double alpha_i = factors_.alphas.back();

  // beta_{i+1} u_{i+1} = A z_i - alpha_i u_i
  const Vector az = az_.size() != 0 ? az_ : a.apply(z_last());
  Vector r = az - alpha_i * u_last();
  if (options_.reorthogonalize) reorthogonalize_u(r);
  const double beta = r.norm();
  if (!std::isfinite(beta)) throw NumericalBreakdownError("gGKB: beta is not finite");
  scale_ = std::max(scale_, az.norm());
  if (beta <= tolerance_ * scale_) {
    factors_.betas.push_back(0.0);
    terminate(i);
    return {StepOutcome::Terminated, 0.0, 0.0};
  }
  factors_.betas.push_back(beta);
  r /= beta;

  // alpha_{i+1} zbar_{i+1} = A^T u_{i+1} - beta_{i+1} zbar_i
  Vector p, s;
  double quad = 0.0;
  az_.resize(0);
  if (options_.reorthogonalize) {
    // p changes after A^T u, so the fused chain does not apply.
    p = a.apply_adjoint(r) - beta * zbar_last();
    reorthogonalize_p(p);
    auto pinv = norm_.apply_pinv(p);
    s = std::move(pinv.s);
    quad = pinv.quad;
  } else {
    auto chain = norm_.adjoint_pinv(r, -beta * zbar_last());
    p = std::move(chain.p);
    s = std::move(chain.s);
    quad = chain.quad;
    az_ = std::move(chain.as);
  }
  push(factors_.u, std::move(r));
  check_quadratic_form(s, p);
  const double alpha = std::sqrt(quad);
  if (!std::isfinite(alpha)) throw NumericalBreakdownError("gGKB: alpha is not finite");
  scale_ = std::max(scale_, beta);
  if (alpha <= tolerance_ * std::max(scale_, alpha)) {
    factors_.alphas.push_back(0.0);
    terminate(i);
    return {StepOutcome::Terminated, 0.0, beta};
  }
  factors_.alphas.push_back(alpha);
  push(factors_.z, s / alpha);
  push(factors_.zbar, p / alpha);
  if (az_.size() != 0) az_ /= alpha;
  return {StepOutcome::Extended, alpha, beta};
}

BidiagFactors run_ggkb(const SolutionNorm& norm, const Vector& b, int max_steps,
                       bool reorthogonalize) {
  if (max_steps < 1) throw UsageError("run_ggkb: max_steps must be >= 1");
  BidiagOptions options;
  options.reorthogonalize = reorthogonalize;
  options.keep_basis = true;
  GolubKahan gk(norm, b, options);
  while (!gk.terminated() && gk.factors().steps < max_steps) gk.step();
  return gk.factors();
}

}  // namespace idarr
