#pragma once

#include <vector>

#include "netdemix/model.hpp"

namespace netdemix {

/// Node-wise diagonal Gaussian; both N x T, sigma > 0.
struct LatentDistribution {
  Var mu;
  Var sigma;
};

/// Closed-form KL(q || p) of diagonal Gaussians, summed over all entries.
Var kl_gaussian(const LatentDistribution& q, const LatentDistribution& p);
/// Plain-value version of kl_gaussian.
double kl_gaussian(const Matrix& mu_q, const Matrix& sigma_q, const Matrix& mu_p,
                   const Matrix& sigma_p);

/// sum_{t>=2} sum_i [y_hat(i,t) - ((A + I) y_hat(:,t-1))_i]_+ with A the raw
/// binary adjacency.
Var locality_penalty(Var y_hat, const Matrix& adjacency);

/// Graph conditional VAE. Parameters live in one store under three prefixes:
/// `phi.` (prior), `psi.` (posterior) and `theta.` (deprojection).
class DDmix final : public Model {
 public:
  explicit DDmix(ModelConfig cfg);

  /// p_phi(z | x): x -> g-U-Net(1 -> T) -> GCN heads for mu and log sigma.
  LatentDistribution prior(Tape& tape, const GraphContext& ctx, Var x);
  /// q_psi(z | Y): same layout with T input features.
  LatentDistribution posterior(Tape& tape, const GraphContext& ctx, Var y);
  /// g_theta(x, z): x -> g-U-Net(1 -> T), concat z -> g-U-Net(2T -> T) -> sigmoid.
  Var deproject(Tape& tape, const GraphContext& ctx, Var x, Var z);

  struct LossTerms {
    Var kl;
    Var bce;
    Var l2;
    Var locality;
    Var total;
  };
  /// Training path: z ~ q_psi(Y) via reparametrization, Y_hat = g_theta(x, z).
  LossTerms loss_terms(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng& rng);

  Var training_loss(Tape& tape, const GraphContext& ctx, const Sample& sample, Rng& rng,
                    bool training) override;

  /// Test path: z ~ p_phi(x). With num_draws > 1 the draws use substreams
  /// 0..num_draws-1 of `rng` and their entrywise mean is returned.
  Matrix reconstruct(const GraphContext& ctx, const Vector& x, Rng& rng, std::size_t num_draws = 1,
                     std::vector<Matrix>* draws = nullptr);

  Matrix predict(const GraphContext& ctx, const Vector& x, Rng& rng) override;

  nlohmann::json describe() const override;

 private:
  LatentDistribution latent_head(Tape& tape, const GraphContext& ctx, const std::string& prefix,
                                 Var features);
};

}  // namespace netdemix
