#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "dpp/mesh.hpp"

namespace dpp {

using ScalarField = std::function<double(const Eigen::Vector3d&)>;
using VectorField = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;
using TensorField = std::function<Eigen::Matrix3d(const Eigen::Vector3d&)>;
/// Boundary data may depend on time; steady drivers evaluate at t = 0.
using BoundaryValue = std::function<double(const Eigen::Vector3d&, double)>;

/// mu, beta, body force and the two permeability tensors of the flow model.
struct MaterialData {
  double mu = 1.0;
  double beta = 0.0;
  VectorField gamma_b;  // specific body force (already times gamma)
  TensorField K1, K2;   // SPD, top-left dim x dim block used

  static MaterialData isotropic(double mu, double beta, double k1, double k2,
                                const Eigen::Vector3d& gamma_b = Eigen::Vector3d::Zero());
  /// Eigenvalue SPD check at sample points; throws std::invalid_argument.
  void validate(int dim, const std::vector<Eigen::Vector3d>& sample_points) const;
};

double mass_transfer(double p1, double p2, double beta, double mu);
double viscosity_of_concentration(double c, double mu0, double Rc);

/// Per-network boundary partition: each mesh tag goes to exactly one of
/// pressure (Gamma^p_i) or normal_velocity (Gamma^u_i) for each network i.
struct BoundarySpec {
  std::map<std::string, BoundaryValue> pressure[2];         // [0] = network 1
  std::map<std::string, BoundaryValue> normal_velocity[2];  // [0] = network 1
  std::set<std::string> weak_velocity_tags;                 // enforced via Nitsche

  void set_pressure(int network, const std::string& tag, BoundaryValue v) {
    pressure[network - 1][tag] = std::move(v);
  }
  void set_pressure(int network, const std::string& tag, double v) {
    pressure[network - 1][tag] = [v](const Eigen::Vector3d&, double) { return v; };
  }
  void set_normal_velocity(int network, const std::string& tag, BoundaryValue v,
                           bool weak = false) {
    normal_velocity[network - 1][tag] = std::move(v);
    if (weak) weak_velocity_tags.insert(tag);
  }
  void set_normal_velocity(int network, const std::string& tag, double v, bool weak = false) {
    set_normal_velocity(
        network, tag, [v](const Eigen::Vector3d&, double) { return v; }, weak);
  }
  /// Throws if a mesh tag is missing from, or doubly assigned within, a network.
  void validate(const Mesh& mesh) const;
};

bool needs_datum_constraint(const BoundarySpec& spec);

struct TransientData {
  double rho1 = 0.0, rho2 = 0.0;
  double phi1 = 0.0, phi2 = 0.0;
  std::optional<double> gamma;  // when given, checks rho_i = phi_i * gamma
  double dt = 0.0;              // maximum allowable step
  double T = 0.0;
  VectorField u01, u02;  // initial velocities

  void validate() const;
};

struct TransportData {
  double mu0 = 1.0;
  double Rc = 0.0;
  Eigen::Matrix3d D = Eigen::Matrix3d::Zero();  // diffusivity, top-left block
  // Residual-based shock-capturing diffusion coefficient (0 disables);
  // keeps advection-dominated fronts bounded without smearing smooth regions.
  double shock_capture = 0.5;
  ScalarField f;                                // source
  // Initial concentration: base field plus uniform random perturbation.
  ScalarField c0;
  double perturbation = 0.0;
  unsigned long seed = 0;
  // Transport boundary partition by mesh tag.
  std::map<std::string, BoundaryValue> dirichlet;  // c = c^p
  std::map<std::string, BoundaryValue> flux;       // total flux q^p
  std::set<std::string> outflow;                   // advective outflow (implicit)
};

}  // namespace dpp
