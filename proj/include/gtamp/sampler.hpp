#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gtamp/motion.hpp"
#include "gtamp/nn/mlp.hpp"
#include "gtamp/world.hpp"

namespace gtamp {

enum class Phase { Pick, Place };

// n_k x 2 binary matrix: collisions at key configurations and membership in
// the goal manipulation sweeps.
struct KeyConfigMatrix {
  int n_k = 0;
  std::vector<double> collision;   // column 0
  std::vector<double> goal_sweep;  // column 1

  std::vector<double> flatten() const;  // [collision..., goal_sweep...]
};

// col0[k]: robot footprint at key config k overlaps some movable.
// col1[k]: key config k is within tau_v of a waypoint of some goal sweep.
KeyConfigMatrix encode_state(const Environment& env, const WorldState& state,
                             const KeyConfigSet& keyconfigs,
                             const std::vector<const SweptVolume*>& goal_volumes, double tau_v);

// Occlusion count used by the data-cleaning rule: how many of the given goal
// volumes the footprint overlaps.
int occlusion_count(const Footprint& obj, const std::vector<const SweptVolume*>& goal_volumes);

// One continuous-parameter training record in the critic's kappa space:
// pick = (cos chi, sin chi); place = (x, y, cos t, sin t, cos chi, sin chi).
struct SamplerRecord {
  std::vector<double> phi;       // flattened key-config matrix (2 * n_k)
  std::vector<double> obj_pose;  // (x, y, theta) of the manipulated object
  int object = -1;
  int region = -1;
  Phase phase = Phase::Pick;
  std::vector<double> kappa;
  std::uint64_t episode_id = 0;
  int step = -1;
};

struct CleanedDataset {
  int n_k = 0;
  std::vector<SamplerRecord> records;

  std::vector<const SamplerRecord*> bucket(Phase phase, int region) const;
};

constexpr int kPickKappaDim = 2;
constexpr int kPlaceKappaDim = 6;
constexpr int kObjPoseDim = 3;

std::vector<double> encode_pick_kappa(double chi_pick);
std::vector<double> encode_place_kappa(const Pose2& place_pose, double chi_place);
double decode_pick_kappa(const std::vector<double>& kappa);
std::pair<Pose2, double> decode_place_kappa(const std::vector<double>& kappa);

struct WganConfig {
  int d_z = 4;
  int hidden = 64;
  double lambda_gp = 10.0;
  int n_tot = 20000;
  int n_c = 5;
  int n_b = 32;
  double lr_theta = 1e-4;
  double lr_alpha = 1e-4;
};

struct WganCurvePoint {
  int step = 0;
  double critic_loss = 0.0;
  double generator_score = 0.0;
  double mean_grad_norm = 0.0;
};

// Trained pair for one (phase, region) bucket.
struct SamplerHead {
  Phase phase = Phase::Pick;
  int region = -1;
  nn::Mlp generator;  // [phi, obj pose, z] -> raw head outputs
  nn::Mlp critic;     // [phi, obj pose, kappa] -> score (tanh hidden)
  std::vector<WganCurvePoint> curve;
  bool degenerate_batch = false;  // bucket smaller than n_b; sampled with replacement
};

// Map raw generator outputs to kappa space. Pick: unit-circle projection of a
// 2-vector. Place: tanh-bounded position inside the region plus two
// unit-circle angle heads.
std::vector<double> generator_to_kappa(Phase phase, const Footprint& region_fp,
                                       const std::vector<double>& raw);
nn::Var generator_to_kappa_graph(Phase phase, const Footprint& region_fp, const nn::Var& raw);

// Algorithm: alternating critic (n_c steps) and generator updates with the
// squared gradient penalty; deterministic in seed.
SamplerHead train_wgan_gp(const std::vector<const SamplerRecord*>& bucket, Phase phase, int region,
                          const Footprint& region_fp, int n_k, const WganConfig& config,
                          std::uint64_t seed);

// Post-training audit: mean ||grad_kappa D|| over data/generator interpolates.
double critic_gradient_norm(const SamplerHead& head, const std::vector<const SamplerRecord*>& bucket,
                            const Footprint& region_fp, int n_samples, Rng& rng);

// Gaussian-kernel KDE with Scott's rule bandwidth.
double kde_log_density(const std::vector<std::vector<double>>& samples,
                       const std::vector<double>& x);

// The full learned sampling artifact consumed by the search.
class LearnedSampler {
 public:
  KeyConfigSet keyconfigs;
  double tau_v = 0.0;
  std::map<std::pair<int, int>, SamplerHead> heads;  // key = (phase, region)

  bool has(Phase phase, int region) const;
  std::vector<double> draw_kappa(Phase phase, int region, const Footprint& region_fp,
                                 const std::vector<double>& phi,
                                 const std::vector<double>& obj_pose, Rng& rng) const;

  void save(const std::string& path) const;
  static LearnedSampler load(const std::string& path);
};

// Mean KDE log-likelihood of held-out kappa under n_gen generator draws per
// record.
double evaluate_kde(const LearnedSampler& sampler, const Environment& env,
                    const std::vector<SamplerRecord>& holdout, int n_gen, std::uint64_t seed);

}  // namespace gtamp
