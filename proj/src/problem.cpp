#include "dpp/problem.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace dpp {

MaterialData MaterialData::isotropic(double mu, double beta, double k1, double k2,
                                     const Eigen::Vector3d& gamma_b) {
  if (!(mu > 0)) throw std::invalid_argument("MaterialData: mu must be > 0");
  if (beta < 0) throw std::invalid_argument("MaterialData: beta must be >= 0");
  if (!(k1 > 0) || !(k2 > 0)) throw std::invalid_argument("MaterialData: permeabilities must be > 0");
  MaterialData m;
  m.mu = mu;
  m.beta = beta;
  m.gamma_b = [gamma_b](const Eigen::Vector3d&) { return gamma_b; };
  m.K1 = [k1](const Eigen::Vector3d&) { return Eigen::Matrix3d(k1 * Eigen::Matrix3d::Identity()); };
  m.K2 = [k2](const Eigen::Vector3d&) { return Eigen::Matrix3d(k2 * Eigen::Matrix3d::Identity()); };
  return m;
}

void MaterialData::validate(int dim, const std::vector<Eigen::Vector3d>& sample_points) const {
  if (!(mu > 0)) throw std::invalid_argument("MaterialData: mu must be > 0");
  if (beta < 0) throw std::invalid_argument("MaterialData: beta must be >= 0");
  for (const auto& x : sample_points) {
    for (const auto* K : {&K1, &K2}) {
      Eigen::MatrixXd Kd = (*K)(x).topLeftCorner(dim, dim);
      double scale = Kd.norm();
      if ((Kd - Kd.transpose()).norm() > 1e-12 * std::max(scale, 1.0))
        throw std::invalid_argument("MaterialData: permeability tensor not symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kd);
      if (es.eigenvalues().minCoeff() <= 1e-12 * scale)
        throw std::invalid_argument("MaterialData: permeability tensor not positive definite");
    }
  }
}

double mass_transfer(double p1, double p2, double beta, double mu) {
  if (!(mu > 0)) throw std::invalid_argument("mass_transfer: mu must be > 0");
  return -(beta / mu) * (p1 - p2);
}

double viscosity_of_concentration(double c, double mu0, double Rc) {
  if (!(mu0 > 0)) throw std::invalid_argument("viscosity_of_concentration: mu0 must be > 0");
  return mu0 * std::exp(Rc * (1.0 - c));
}

void BoundarySpec::validate(const Mesh& mesh) const {
  auto mesh_tags = mesh.tags();
  for (int net = 0; net < 2; ++net) {
    for (const auto& tag : mesh_tags) {
      bool has_p = pressure[net].count(tag) > 0;
      bool has_u = normal_velocity[net].count(tag) > 0;
      if (has_p && has_u)
        throw std::invalid_argument("BoundarySpec: tag '" + tag +
                                    "' assigned to both pressure and velocity for network " +
                                    std::to_string(net + 1));
      if (!has_p && !has_u)
        throw std::invalid_argument("BoundarySpec: tag '" + tag +
                                    "' unassigned for network " + std::to_string(net + 1));
    }
    for (const auto& [tag, fn] : pressure[net])
      if (std::find(mesh_tags.begin(), mesh_tags.end(), tag) == mesh_tags.end())
        throw std::invalid_argument("BoundarySpec: unknown mesh tag '" + tag + "'");
    for (const auto& [tag, fn] : normal_velocity[net])
      if (std::find(mesh_tags.begin(), mesh_tags.end(), tag) == mesh_tags.end())
        throw std::invalid_argument("BoundarySpec: unknown mesh tag '" + tag + "'");
  }
  for (const auto& tag : weak_velocity_tags)
    if (normal_velocity[0].count(tag) + normal_velocity[1].count(tag) == 0)
      throw std::invalid_argument("BoundarySpec: weak tag '" + tag + "' is not a velocity tag");
}

bool needs_datum_constraint(const BoundarySpec& spec) {
  return spec.pressure[0].empty() && spec.pressure[1].empty();
}

void TransientData::validate() const {
  if (!(dt > 0)) throw std::invalid_argument("TransientData: dt must be > 0");
  if (!(T >= dt)) throw std::invalid_argument("TransientData: T must be >= dt");
  if (rho1 < 0 || rho2 < 0) throw std::invalid_argument("TransientData: densities must be >= 0");
  if (gamma) {
    if (std::abs(rho1 - phi1 * (*gamma)) > 1e-12 * std::max(1.0, std::abs(rho1)) ||
        std::abs(rho2 - phi2 * (*gamma)) > 1e-12 * std::max(1.0, std::abs(rho2)))
      throw std::invalid_argument("TransientData: rho_i != phi_i * gamma");
  }
}

}  // namespace dpp
