#include "gtamp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gtamp/util.hpp"

namespace gtamp {

using nn::Mlp;
using nn::Tensor;
using nn::Var;

std::vector<double> KeyConfigMatrix::flatten() const {
  std::vector<double> out = collision;
  out.insert(out.end(), goal_sweep.begin(), goal_sweep.end());
  return out;
}

KeyConfigMatrix encode_state(const Environment& env, const WorldState& state,
                             const KeyConfigSet& keyconfigs,
                             const std::vector<const SweptVolume*>& goal_volumes, double tau_v) {
  KeyConfigMatrix m;
  m.n_k = static_cast<int>(keyconfigs.configs.size());
  m.collision.assign(m.n_k, 0.0);
  m.goal_sweep.assign(m.n_k, 0.0);
  for (int k = 0; k < m.n_k; ++k) {
    const Pose2& q = keyconfigs.configs[k];
    Footprint robot{env.robot_shape, q};
    for (std::size_t i = 0; i < env.movables.size(); ++i) {
      if (collides(robot, object_footprint(env, state, static_cast<int>(i)))) {
        m.collision[k] = 1.0;
        break;
      }
    }
    for (const SweptVolume* vol : goal_volumes) {
      if (!vol) continue;
      bool near_sweep = false;
      for (const auto& wp : vol->waypoints) {
        for (const auto& fp : wp) {
          if (distance_xy(q, fp.pose) <= tau_v) {
            near_sweep = true;
            break;
          }
        }
        if (near_sweep) break;
      }
      if (near_sweep) {
        m.goal_sweep[k] = 1.0;
        break;
      }
    }
  }
  return m;
}

int occlusion_count(const Footprint& obj, const std::vector<const SweptVolume*>& goal_volumes) {
  int n = 0;
  for (const SweptVolume* vol : goal_volumes)
    if (vol && vol->intersects(obj)) ++n;
  return n;
}

std::vector<const SamplerRecord*> CleanedDataset::bucket(Phase phase, int region) const {
  std::vector<const SamplerRecord*> out;
  for (const auto& r : records)
    if (r.phase == phase && r.region == region) out.push_back(&r);
  return out;
}

std::vector<double> encode_pick_kappa(double chi_pick) {
  return {std::cos(chi_pick), std::sin(chi_pick)};
}

std::vector<double> encode_place_kappa(const Pose2& place_pose, double chi_place) {
  return {place_pose.x,          place_pose.y,          std::cos(place_pose.theta),
          std::sin(place_pose.theta), std::cos(chi_place), std::sin(chi_place)};
}

double decode_pick_kappa(const std::vector<double>& kappa) {
  return std::atan2(kappa.at(1), kappa.at(0));
}

std::pair<Pose2, double> decode_place_kappa(const std::vector<double>& kappa) {
  Pose2 pose(kappa.at(0), kappa.at(1), std::atan2(kappa.at(3), kappa.at(2)));
  return {pose, std::atan2(kappa.at(5), kappa.at(4))};
}

namespace {

constexpr double kNormEps = 1e-9;

void normalize2(double& a, double& b) {
  double n = std::sqrt(a * a + b * b + kNormEps);
  a /= n;
  b /= n;
}

// Graph-mode unit-circle projection of two columns.
std::pair<Var, Var> normalize2_graph(const Var& a, const Var& b) {
  Var n = nn::sqrt(nn::add_scalar(nn::add(nn::square(a), nn::square(b)), kNormEps));
  Var inv = nn::reciprocal(n);
  return {nn::mul(a, inv), nn::mul(b, inv)};
}

}  // namespace

std::vector<double> generator_to_kappa(Phase phase, const Footprint& region_fp,
                                       const std::vector<double>& raw) {
  if (phase == Phase::Pick) {
    double a = raw.at(0), b = raw.at(1);
    normalize2(a, b);
    return {a, b};
  }
  double u = std::tanh(raw.at(0)) * region_fp.shape.half_width;
  double v = std::tanh(raw.at(1)) * region_fp.shape.half_height;
  double cs = std::cos(region_fp.pose.theta), sn = std::sin(region_fp.pose.theta);
  double x = region_fp.pose.x + cs * u - sn * v;
  double y = region_fp.pose.y + sn * u + cs * v;
  double t0 = raw.at(2), t1 = raw.at(3), c0 = raw.at(4), c1 = raw.at(5);
  normalize2(t0, t1);
  normalize2(c0, c1);
  return {x, y, t0, t1, c0, c1};
}

Var generator_to_kappa_graph(Phase phase, const Footprint& region_fp, const Var& raw) {
  if (phase == Phase::Pick) {
    auto [a, b] = normalize2_graph(nn::slice_cols(raw, 0, 1), nn::slice_cols(raw, 1, 2));
    return nn::concat_cols({a, b});
  }
  Var u = nn::scale(nn::tanh(nn::slice_cols(raw, 0, 1)), region_fp.shape.half_width);
  Var v = nn::scale(nn::tanh(nn::slice_cols(raw, 1, 2)), region_fp.shape.half_height);
  double cs = std::cos(region_fp.pose.theta), sn = std::sin(region_fp.pose.theta);
  Var x = nn::add_scalar(nn::sub(nn::scale(u, cs), nn::scale(v, sn)), region_fp.pose.x);
  Var y = nn::add_scalar(nn::add(nn::scale(u, sn), nn::scale(v, cs)), region_fp.pose.y);
  auto [t0, t1] = normalize2_graph(nn::slice_cols(raw, 2, 3), nn::slice_cols(raw, 3, 4));
  auto [c0, c1] = normalize2_graph(nn::slice_cols(raw, 4, 5), nn::slice_cols(raw, 5, 6));
  return nn::concat_cols({x, y, t0, t1, c0, c1});
}

namespace {

int kappa_dim(Phase phase) { return phase == Phase::Pick ? kPickKappaDim : kPlaceKappaDim; }
int raw_dim(Phase phase) { return phase == Phase::Pick ? 2 : 6; }

std::vector<Var> bind_constant(const Mlp& net) {
  std::vector<Var> out;
  for (const Tensor* t : net.param_tensors()) out.push_back(nn::constant(*t));
  return out;
}

Tensor rows_tensor(const std::vector<std::vector<double>>& rows) {
  Tensor t(static_cast<int>(rows.size()), static_cast<int>(rows.at(0).size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) t.at(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  return t;
}

std::vector<double> condition_vector(const SamplerRecord& rec) {
  std::vector<double> out = rec.phi;
  out.insert(out.end(), rec.obj_pose.begin(), rec.obj_pose.end());
  return out;
}

}  // namespace

SamplerHead train_wgan_gp(const std::vector<const SamplerRecord*>& bucket, Phase phase, int region,
                          const Footprint& region_fp, int n_k, const WganConfig& config,
                          std::uint64_t seed) {
  if (bucket.empty()) throw std::invalid_argument("train_wgan_gp: empty bucket");
  const int kd = kappa_dim(phase);
  const int cond_dim = 2 * n_k + kObjPoseDim;
  Rng rng(mix64(seed, 0x36a4));

  SamplerHead head;
  head.phase = phase;
  head.region = region;
  head.degenerate_batch = static_cast<int>(bucket.size()) < config.n_b;
  head.generator = Mlp({cond_dim + config.d_z, config.hidden, config.hidden, raw_dim(phase)},
                       nn::Activation::Relu, nn::Activation::Linear, rng);
  head.critic = Mlp({cond_dim + kd, config.hidden, config.hidden, 1}, nn::Activation::Tanh,
                    nn::Activation::Linear, rng);

  nn::Adam adam_alpha(config.lr_alpha);
  nn::Adam adam_theta(config.lr_theta);
  const int curve_every = std::max(1, config.n_tot / 200);

  auto gen_kappa_value = [&](const SamplerRecord& rec, Rng& r) {
    std::vector<double> in = condition_vector(rec);
    for (int z = 0; z < config.d_z; ++z) in.push_back(r.normal());
    return generator_to_kappa(phase, region_fp, head.generator.forward1(in));
  };

  for (int t = 0; t < config.n_tot; ++t) {
    double critic_loss = 0.0, grad_norm = 0.0;
    for (int tc = 0; tc < config.n_c; ++tc) {
      std::vector<std::vector<double>> cond_rows, data_rows, gen_rows, hat_rows;
      for (int i = 0; i < config.n_b; ++i) {
        const SamplerRecord& rec = *bucket[rng.uniform_int(static_cast<int>(bucket.size()))];
        std::vector<double> kgen = gen_kappa_value(rec, rng);
        double eps = rng.uniform();
        std::vector<double> khat(kd);
        for (int d = 0; d < kd; ++d) khat[d] = eps * rec.kappa[d] + (1.0 - eps) * kgen[d];
        cond_rows.push_back(condition_vector(rec));
        data_rows.push_back(rec.kappa);
        gen_rows.push_back(std::move(kgen));
        hat_rows.push_back(std::move(khat));
      }
      std::vector<Var> cparams = head.critic.bind();
      Var cond = nn::constant(rows_tensor(cond_rows));
      Var d_data = head.critic.forward_graph(
          nn::concat_cols({cond, nn::constant(rows_tensor(data_rows))}), cparams);
      Var d_gen = head.critic.forward_graph(
          nn::concat_cols({cond, nn::constant(rows_tensor(gen_rows))}), cparams);
      Var k_hat = nn::leaf(rows_tensor(hat_rows));
      Var d_hat = head.critic.forward_graph(nn::concat_cols({cond, k_hat}), cparams);
      // Row-independent outputs: the gradient of the summed score w.r.t. the
      // batched kappa-hat leaf stacks the per-sample input gradients.
      Var g = nn::grad_graph(nn::sum_all(d_hat), {k_hat})[0];
      Var norms = nn::sqrt(nn::matmul(nn::square(g), nn::constant(Tensor(kd, 1, 1.0))));
      Var penalty = nn::mean_all(nn::square(nn::add_scalar(norms, -1.0)));
      Var wdist = nn::sub(nn::mean_all(d_gen), nn::mean_all(d_data));
      Var loss = nn::add(wdist, nn::scale(penalty, config.lambda_gp));
      critic_loss = loss.scalar();
      grad_norm = nn::mean_all(norms).scalar();
      adam_alpha.step(head.critic.param_tensors(), nn::grad(loss, cparams));
    }

    // Generator step: maximize the critic score of fresh samples.
    std::vector<std::vector<double>> gin_rows;
    std::vector<std::vector<double>> cond_rows;
    for (int i = 0; i < config.n_b; ++i) {
      const SamplerRecord& rec = *bucket[rng.uniform_int(static_cast<int>(bucket.size()))];
      std::vector<double> in = condition_vector(rec);
      cond_rows.push_back(in);
      for (int z = 0; z < config.d_z; ++z) in.push_back(rng.normal());
      gin_rows.push_back(std::move(in));
    }
    std::vector<Var> gparams = head.generator.bind();
    Var raw = head.generator.forward_graph(nn::constant(rows_tensor(gin_rows)), gparams);
    Var kappa = generator_to_kappa_graph(phase, region_fp, raw);
    Var d = head.critic.forward_graph(
        nn::concat_cols({nn::constant(rows_tensor(cond_rows)), kappa}),
        bind_constant(head.critic));
    Var gen_loss = nn::neg(nn::mean_all(d));
    double gen_score = -gen_loss.scalar();
    adam_theta.step(head.generator.param_tensors(), nn::grad(gen_loss, gparams));

    if (t % curve_every == 0 || t + 1 == config.n_tot)
      head.curve.push_back({t, critic_loss, gen_score, grad_norm});
  }
  return head;
}

double critic_gradient_norm(const SamplerHead& head,
                            const std::vector<const SamplerRecord*>& bucket,
                            const Footprint& region_fp, int n_samples, Rng& rng) {
  if (bucket.empty()) return 0.0;
  const int kd = kappa_dim(head.phase);
  double total = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const SamplerRecord& rec = *bucket[rng.uniform_int(static_cast<int>(bucket.size()))];
    std::vector<double> gin = condition_vector(rec);
    const int d_z = head.generator.input_width() - static_cast<int>(gin.size());
    for (int z = 0; z < d_z; ++z) gin.push_back(rng.normal());
    std::vector<double> kgen =
        generator_to_kappa(head.phase, region_fp, head.generator.forward1(gin));
    double eps = rng.uniform();
    Tensor kh(1, kd);
    for (int d = 0; d < kd; ++d) kh.data[d] = eps * rec.kappa[d] + (1.0 - eps) * kgen[d];
    Var k_hat = nn::leaf(std::move(kh));
    Tensor cond(1, static_cast<int>(condition_vector(rec).size()));
    cond.data = condition_vector(rec);
    Var d_hat = head.critic.forward_graph(nn::concat_cols({nn::constant(std::move(cond)), k_hat}),
                                          bind_constant(head.critic));
    Var g = nn::grad_graph(nn::sum_all(d_hat), {k_hat})[0];
    double n2 = 0.0;
    for (double v : g.value().data) n2 += v * v;
    total += std::sqrt(n2);
  }
  return total / n_samples;
}

double kde_log_density(const std::vector<std::vector<double>>& samples,
                       const std::vector<double>& x) {
  const int n = static_cast<int>(samples.size());
  const int d = static_cast<int>(x.size());
  if (n < 2) throw std::invalid_argument("kde_log_density: need >= 2 samples");
  std::vector<double> h(d);
  const double factor = std::pow(static_cast<double>(n), -1.0 / (d + 4));
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s[j];
    mean /= n;
    double var = 0.0;
    for (const auto& s : samples) var += (s[j] - mean) * (s[j] - mean);
    var /= (n - 1);
    h[j] = std::max(std::sqrt(var) * factor, 1e-6);
  }
  double log_norm = 0.0;
  for (int j = 0; j < d; ++j) log_norm += std::log(h[j] * std::sqrt(2.0 * M_PI));
  double max_e = -1e300;
  std::vector<double> exps(n);
  for (int i = 0; i < n; ++i) {
    double e = 0.0;
    for (int j = 0; j < d; ++j) {
      double z = (x[j] - samples[i][j]) / h[j];
      e -= 0.5 * z * z;
    }
    exps[i] = e;
    max_e = std::max(max_e, e);
  }
  double s = 0.0;
  for (double e : exps) s += std::exp(e - max_e);
  return max_e + std::log(s) - std::log(static_cast<double>(n)) - log_norm;
}

bool LearnedSampler::has(Phase phase, int region) const {
  return heads.count({static_cast<int>(phase), region}) > 0;
}

std::vector<double> LearnedSampler::draw_kappa(Phase phase, int region, const Footprint& region_fp,
                                               const std::vector<double>& phi,
                                               const std::vector<double>& obj_pose,
                                               Rng& rng) const {
  const SamplerHead& head = heads.at({static_cast<int>(phase), region});
  std::vector<double> in = phi;
  in.insert(in.end(), obj_pose.begin(), obj_pose.end());
  const int d_z = head.generator.input_width() - static_cast<int>(in.size());
  for (int z = 0; z < d_z; ++z) in.push_back(rng.normal());
  return generator_to_kappa(phase, region_fp, head.generator.forward1(in));
}

void LearnedSampler::save(const std::string& path) const {
  nn::CheckpointWriter w;
  w.add_meta("kind", "learned-sampler");
  w.add_meta("tau_v", std::to_string(tau_v));
  w.add_meta("keyconfigs", key_configs_to_json(keyconfigs));
  std::string index;
  for (const auto& [key, head] : heads) {
    std::string prefix = "head_" + std::to_string(key.first) + "_" + std::to_string(key.second);
    if (!index.empty()) index += ",";
    index += prefix;
    nn::MlpSerializer::save(head.generator, w, prefix + ".gen");
    nn::MlpSerializer::save(head.critic, w, prefix + ".critic");
    w.add_meta(prefix + ".phase", std::to_string(key.first));
    w.add_meta(prefix + ".region", std::to_string(key.second));
  }
  w.add_meta("heads", index);
  w.save(path);
}

LearnedSampler LearnedSampler::load(const std::string& path) {
  auto r = nn::CheckpointReader::from_file(path);
  LearnedSampler out;
  out.tau_v = std::stod(r.meta("tau_v"));
  out.keyconfigs = key_configs_from_json(r.meta("keyconfigs"));
  std::string index = r.meta("heads");
  std::stringstream ss(index);
  std::string prefix;
  while (std::getline(ss, prefix, ',')) {
    if (prefix.empty()) continue;
    SamplerHead head;
    head.phase = static_cast<Phase>(std::stoi(r.meta(prefix + ".phase")));
    head.region = std::stoi(r.meta(prefix + ".region"));
    head.generator = nn::MlpSerializer::load(r, prefix + ".gen");
    head.critic = nn::MlpSerializer::load(r, prefix + ".critic");
    out.heads[{static_cast<int>(head.phase), head.region}] = std::move(head);
  }
  return out;
}

double evaluate_kde(const LearnedSampler& sampler, const Environment& env,
                    const std::vector<SamplerRecord>& holdout, int n_gen, std::uint64_t seed) {
  double total = 0.0;
  int counted = 0;
  Rng rng(mix64(seed, 0x4de));
  for (const SamplerRecord& rec : holdout) {
    if (!sampler.has(rec.phase, rec.region)) continue;
    Rng sub = rng.fork(mix64(rec.episode_id, static_cast<std::uint64_t>(rec.step)));
    std::vector<std::vector<double>> samples;
    for (int i = 0; i < n_gen; ++i)
      samples.push_back(sampler.draw_kappa(rec.phase, rec.region,
                                           env.regions.at(rec.region).footprint, rec.phi,
                                           rec.obj_pose, sub));
    total += kde_log_density(samples, rec.kappa);
    ++counted;
  }
  return counted > 0 ? total / counted : -1e300;
}

}  // namespace gtamp
