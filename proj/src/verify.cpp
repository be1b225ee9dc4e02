#include "dpp/verify.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpp {

namespace {

int default_error_degree(const Mesh& mesh, int order, int requested) {
  if (requested > 0) return requested;
  const int cap = mesh.dim == 1 ? 29 : 15;
  return std::min(2 * order + 3, cap);
}

double dim3_dot(const Eigen::Vector3d& a, const Eigen::Vector3d& b, int dim) {
  double s = 0;
  for (int d = 0; d < dim; ++d) s += a[d] * b[d];
  return s;
}

}  // namespace

ErrorNorms error_norms(const FieldSolution& sol, const ExactFields& exact,
                       int quadrature_degree) {
  const Mesh& mesh = *sol.mesh;
  const int dim = mesh.dim;
  const int qd = default_error_degree(mesh, sol.dofmap->order, quadrature_degree);
  QuadratureRule rule = gauss_rule(mesh.elements[0].kind, qd);

  double eu1 = 0, eu2 = 0, ep1 = 0, ep2 = 0, eg1 = 0, eg2 = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    auto vals = sol.eval_on_element(e, rule.points);
    auto geom = map_element(mesh, e, rule.points);
    for (int q = 0; q < rule.n(); ++q) {
      const double w = rule.weights[q] * geom.det[q];
      const Eigen::Vector3d& x = geom.x[q];
      if (exact.u1) {
        Eigen::Vector3d d = vals[q].u1 - exact.u1(x);
        eu1 += w * dim3_dot(d, d, dim);
      }
      if (exact.u2) {
        Eigen::Vector3d d = vals[q].u2 - exact.u2(x);
        eu2 += w * dim3_dot(d, d, dim);
      }
      if (exact.p1) {
        double d = vals[q].p1 - exact.p1(x);
        ep1 += w * d * d;
      }
      if (exact.p2) {
        double d = vals[q].p2 - exact.p2(x);
        ep2 += w * d * d;
      }
      if (exact.grad_p1) {
        Eigen::Vector3d d = vals[q].grad_p1 - exact.grad_p1(x);
        eg1 += w * dim3_dot(d, d, dim);
      }
      if (exact.grad_p2) {
        Eigen::Vector3d d = vals[q].grad_p2 - exact.grad_p2(x);
        eg2 += w * dim3_dot(d, d, dim);
      }
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ErrorNorms out;
  out.l2_u1 = exact.u1 ? std::sqrt(eu1) : nan;
  out.l2_u2 = exact.u2 ? std::sqrt(eu2) : nan;
  out.l2_p1 = exact.p1 ? std::sqrt(ep1) : nan;
  out.l2_p2 = exact.p2 ? std::sqrt(ep2) : nan;
  out.h1_p1 = exact.grad_p1 ? std::sqrt(eg1) : nan;
  out.h1_p2 = exact.grad_p2 ? std::sqrt(eg2) : nan;
  return out;
}

double stability_norm(const FieldSolution& sol, const MaterialData& material,
                      int quadrature_degree) {
  SparseMat S = stab_norm_weights(*sol.mesh, *sol.dofmap, material, quadrature_degree);
  const double q = sol.coeffs.dot(S * sol.coeffs);
  return std::sqrt(std::max(0.0, q));
}

double dissipation(const FieldSolution& sol, const MaterialData& material,
                   int quadrature_degree) {
  const Mesh& mesh = *sol.mesh;
  const int dim = mesh.dim;
  const int qd = default_error_degree(mesh, sol.dofmap->order, quadrature_degree);
  QuadratureRule rule = gauss_rule(mesh.elements[0].kind, qd);

  double drag = 0, transfer = 0, div_sq = 0, vol = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    auto vals = sol.eval_on_element(e, rule.points);
    auto geom = map_element(mesh, e, rule.points);
    for (int q = 0; q < rule.n(); ++q) {
      const double w = rule.weights[q] * geom.det[q];
      const Eigen::Vector3d& x = geom.x[q];
      Eigen::MatrixXd K1inv = material.K1(x).topLeftCorner(dim, dim).inverse();
      Eigen::MatrixXd K2inv = material.K2(x).topLeftCorner(dim, dim).inverse();
      Eigen::VectorXd u1 = vals[q].u1.head(dim), u2 = vals[q].u2.head(dim);
      drag += w * material.mu * (u1.dot(K1inv * u1) + u2.dot(K2inv * u2));
      const double d2 = vals[q].div_u1 * vals[q].div_u1 + vals[q].div_u2 * vals[q].div_u2;
      div_sq += w * d2;
      if (material.beta > 0) transfer += w * 0.5 * (material.mu / material.beta) * d2;
      vol += w;
    }
  }
  if (material.beta == 0.0) {
    if (std::sqrt(div_sq) > 1e-10 * std::max(1.0, std::sqrt(vol)))
      throw std::invalid_argument(
          "dissipation: beta = 0 requires divergence-free velocities, but "
          "||div u|| = " +
          std::to_string(std::sqrt(div_sq)));
    return drag;
  }
  return drag + transfer;
}

double kinematic_admissibility_residual(const FieldSolution& sol, int quadrature_degree) {
  const Mesh& mesh = *sol.mesh;
  const int qd = default_error_degree(mesh, sol.dofmap->order, quadrature_degree);
  QuadratureRule rule = gauss_rule(mesh.elements[0].kind, qd);
  double acc = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    auto vals = sol.eval_on_element(e, rule.points);
    auto geom = map_element(mesh, e, rule.points);
    for (int q = 0; q < rule.n(); ++q) {
      const double s = vals[q].div_u1 + vals[q].div_u2;
      acc += rule.weights[q] * geom.det[q] * s * s;
    }
  }
  return std::sqrt(acc);
}

namespace {

/// One side of the reciprocal relation: data of `data_sol` tested against
/// the fields of `field_sol`.
double reciprocal_functional(const FieldSolution& data_sol, const FieldSolution& field_sol,
                             const MaterialData& material_data, const BoundarySpec& spec_data,
                             const BoundarySpec& spec_field) {
  const Mesh& mesh = *data_sol.mesh;
  const int dim = mesh.dim;
  const int order = data_sol.dofmap->order;
  const int qd = std::min(2 * order + 3, mesh.dim == 1 ? 29 : 15);

  double acc = 0;
  // volume term: gamma b (data) against u1 + u2 (fields)
  if (material_data.gamma_b) {
    QuadratureRule rule = gauss_rule(mesh.elements[0].kind, qd);
    for (int e = 0; e < mesh.n_elements(); ++e) {
      auto vals = field_sol.eval_on_element(e, rule.points);
      auto geom = map_element(mesh, e, rule.points);
      for (int q = 0; q < rule.n(); ++q) {
        const Eigen::Vector3d b = material_data.gamma_b(geom.x[q]);
        acc += rule.weights[q] * geom.det[q] *
               (dim3_dot(b, vals[q].u1, dim) + dim3_dot(b, vals[q].u2, dim));
      }
    }
  }
  // boundary terms per network
  for (int net = 1; net <= 2; ++net) {
    for (const Facet& facet : mesh.boundary_facets) {
      auto fq = facet_quadrature(mesh, facet, qd);
      auto pit = spec_data.pressure[net - 1].find(facet.tag);
      auto uit = spec_data.normal_velocity[net - 1].find(facet.tag);
      if (pit != spec_data.pressure[net - 1].end()) {
        // - <p0_i (data) , u_i (field) . n>
        auto vals = field_sol.eval_on_element(facet.owner, fq.ref_points);
        for (size_t q = 0; q < fq.ref_points.size(); ++q) {
          const double p0 = pit->second(fq.x[q], data_sol.time);
          const Eigen::Vector3d& u = net == 1 ? vals[q].u1 : vals[q].u2;
          acc -= fq.weights[q] * p0 * dim3_dot(u, fq.normals[q], dim);
        }
      } else if (uit != spec_data.normal_velocity[net - 1].end()) {
        // - <p_i (data solution trace) , u_n (field problem's prescribed data)>
        auto fit = spec_field.normal_velocity[net - 1].find(facet.tag);
        if (fit == spec_field.normal_velocity[net - 1].end())
          throw std::invalid_argument(
              "reciprocal_error: the two problems must share the same "
              "boundary partition (tag '" +
              facet.tag + "')");
        auto vals = data_sol.eval_on_element(facet.owner, fq.ref_points);
        for (size_t q = 0; q < fq.ref_points.size(); ++q) {
          const double un = fit->second(fq.x[q], field_sol.time);
          const double p = net == 1 ? vals[q].p1 : vals[q].p2;
          acc -= fq.weights[q] * p * un;
        }
      }
    }
  }
  return acc;
}

}  // namespace

double reciprocal_error(const FieldSolution& prime, const FieldSolution& star,
                        const MaterialData& material_prime, const MaterialData& material_star,
                        const BoundarySpec& spec_prime, const BoundarySpec& spec_star,
                        double* lhs_out, double* rhs_out) {
  const double lhs = reciprocal_functional(prime, star, material_prime, spec_prime, spec_star);
  const double rhs = reciprocal_functional(star, prime, material_star, spec_star, spec_prime);
  if (lhs_out) *lhs_out = lhs;
  if (rhs_out) *rhs_out = rhs;
  const double diff = std::abs(lhs - rhs);
  return std::abs(lhs) < 1e-12 ? diff : diff / std::abs(lhs);
}

namespace {

SlopeFit least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys,
                             bool plateau) {
  const size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  SlopeFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.plateau = plateau;
  return f;
}

}  // namespace

SlopeFit fit_loglog(const std::vector<double>& h, const std::vector<double>& errors) {
  if (h.size() != errors.size() || h.size() < 3)
    throw std::invalid_argument("fit_loglog: need at least 3 matching samples");
  std::vector<double> xs, ys;
  bool plateau = false;
  for (size_t i = 0; i < h.size(); ++i) {
    if (errors[i] < 1e-13) plateau = true;
    xs.push_back(std::log(h[i]));
    ys.push_back(std::log(std::max(errors[i], 1e-300)));
  }
  return least_squares_slope(xs, ys, plateau);
}

SlopeFit fit_semilog(const std::vector<int>& orders, const std::vector<double>& errors) {
  if (orders.size() != errors.size() || orders.size() < 3)
    throw std::invalid_argument("fit_semilog: need at least 3 matching samples");
  std::vector<double> xs, ys;
  bool plateau = false;
  for (size_t i = 0; i < orders.size(); ++i) {
    if (errors[i] < 1e-13) plateau = true;
    xs.push_back(static_cast<double>(orders[i]));
    ys.push_back(std::log10(std::max(errors[i], 1e-300)));
  }
  return least_squares_slope(xs, ys, plateau);
}

double AnalyticalSolution2D::eta() const { return std::sqrt(beta * (k1 + k2) / (k1 * k2)); }

ExactFields AnalyticalSolution2D::fields() const {
  const double k1_ = k1, k2_ = k2, mu_ = mu, beta_ = beta, eta_ = eta();
  const double pi = M_PI;
  ExactFields f;
  f.u1 = [=](const Eigen::Vector3d& x) {
    return Eigen::Vector3d(-k1_ * std::exp(pi * x[0]) * std::sin(pi * x[1]),
                           -k1_ * std::exp(pi * x[0]) * std::cos(pi * x[1]) +
                               (eta_ / beta_) * std::exp(eta_ * x[1]),
                           0.0);
  };
  f.u2 = [=](const Eigen::Vector3d& x) {
    return Eigen::Vector3d(-k2_ * std::exp(pi * x[0]) * std::sin(pi * x[1]),
                           -k2_ * std::exp(pi * x[0]) * std::cos(pi * x[1]) -
                               (eta_ / beta_) * std::exp(eta_ * x[1]),
                           0.0);
  };
  f.p1 = [=](const Eigen::Vector3d& x) {
    return (mu_ / pi) * std::exp(pi * x[0]) * std::sin(pi * x[1]) -
           (mu_ / (beta_ * k1_)) * std::exp(eta_ * x[1]);
  };
  f.p2 = [=](const Eigen::Vector3d& x) {
    return (mu_ / pi) * std::exp(pi * x[0]) * std::sin(pi * x[1]) +
           (mu_ / (beta_ * k2_)) * std::exp(eta_ * x[1]);
  };
  f.grad_p1 = [=](const Eigen::Vector3d& x) {
    return Eigen::Vector3d(
        mu_ * std::exp(pi * x[0]) * std::sin(pi * x[1]),
        mu_ * std::exp(pi * x[0]) * std::cos(pi * x[1]) -
            (mu_ * eta_ / (beta_ * k1_)) * std::exp(eta_ * x[1]),
        0.0);
  };
  f.grad_p2 = [=](const Eigen::Vector3d& x) {
    return Eigen::Vector3d(
        mu_ * std::exp(pi * x[0]) * std::sin(pi * x[1]),
        mu_ * std::exp(pi * x[0]) * std::cos(pi * x[1]) +
            (mu_ * eta_ / (beta_ * k2_)) * std::exp(eta_ * x[1]),
        0.0);
  };
  return f;
}

BoundarySpec AnalyticalSolution2D::boundary_spec() const {
  ExactFields f = fields();
  BoundarySpec spec;
  for (const char* tag : {"left", "right", "bottom", "top"}) {
    spec.set_pressure(1, tag, [p = f.p1](const Eigen::Vector3d& x, double) { return p(x); });
    spec.set_pressure(2, tag, [p = f.p2](const Eigen::Vector3d& x, double) { return p(x); });
  }
  return spec;
}

MaterialData AnalyticalSolution2D::material() const {
  return MaterialData::isotropic(mu, beta, k1, k2);
}

}  // namespace dpp
