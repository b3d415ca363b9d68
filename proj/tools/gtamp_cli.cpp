// Command-line front end: instance generation, planning runs, experience
// collection, and the two training pipelines.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "gtamp/experience.hpp"
#include "gtamp/motion.hpp"
#include "gtamp/ranknet.hpp"
#include "gtamp/sampler.hpp"
#include "gtamp/search.hpp"
#include "gtamp/util.hpp"
#include "gtamp/world.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gtamp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

int worker_count() {
  if (const char* env = std::getenv("GTAMP_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::string output_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("GTAMP_OUTPUT_ROOT")) return env;
  return "out";
}

void write_manifest(const fs::path& dir, const json& config) {
  json j;
  j["tool"] = "gtamp";
  j["config"] = config;
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << "\n";
}

std::vector<fs::path> instance_files(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json" && e.path().filename().string().rfind("instance_", 0) == 0)
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<fs::path> episode_files(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json" && e.path().filename().string().rfind("episode_", 0) == 0)
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

// Roadmaps are deterministic in (environment, seed, size); share per instance.
struct RoadmapPool {
  std::mutex mu;
  std::map<std::uint64_t, std::shared_ptr<Roadmap>> by_hash;
  int n_vertices;
  double connect_radius;
  std::uint64_t seed;

  std::shared_ptr<Roadmap> get(const Environment& env) {
    std::uint64_t key = env.hash();
    {
      std::lock_guard<std::mutex> lk(mu);
      auto it = by_hash.find(key);
      if (it != by_hash.end()) return it->second;
    }
    auto rm = std::make_shared<Roadmap>(build_roadmap(env, n_vertices, connect_radius, seed));
    std::lock_guard<std::mutex> lk(mu);
    return by_hash.emplace(key, std::move(rm)).first->second;
  }
};

void parallel_for(int n_tasks, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n_tasks);
  if (workers <= 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double idx = p * (values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
  double frac = idx - lo;
  return values[lo] * (1 - frac) + values[hi] * frac;
}

struct RunRecord {
  std::string instance;
  std::string planner;
  std::uint64_t seed = 0;
  bool solved = false;
  long nodes = 0;
  long smplcont = 0;
  long motion_plans = 0;
  double wall_seconds = 0.0;
};

void write_runs_csv(const fs::path& path, const std::vector<RunRecord>& runs) {
  std::ofstream out(path);
  out << "instance,planner,seed,solved,nodes,smplcont_calls,motion_plans,wall_seconds\n";
  for (const auto& r : runs)
    out << r.instance << "," << r.planner << "," << r.seed << "," << (r.solved ? 1 : 0) << ","
        << r.nodes << "," << r.smplcont << "," << r.motion_plans << "," << r.wall_seconds << "\n";
}

void write_summary_csv(const fs::path& path, const std::string& planner,
                       const std::vector<RunRecord>& runs) {
  std::vector<double> nodes;
  int solved = 0;
  for (const auto& r : runs) {
    nodes.push_back(static_cast<double>(r.nodes));
    if (r.solved) ++solved;
  }
  std::ofstream out(path);
  out << "planner,solved_rate,p25,p50,p75,p90\n";
  out << planner << "," << (runs.empty() ? 0.0 : static_cast<double>(solved) / runs.size()) << ","
      << percentile(nodes, 0.25) << "," << percentile(nodes, 0.50) << ","
      << percentile(nodes, 0.75) << "," << percentile(nodes, 0.90) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar geometric task-and-motion planning toolkit"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "Generate problem instances");
  int gen_n = 25;
  std::uint64_t gen_seed = 0;
  int gen_movables = 8, gen_goal_objects = 1, gen_blockers = 3;
  std::string gen_out;
  gen->add_option("--n", gen_n, "number of instances");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--movables", gen_movables, "movable objects per instance");
  gen->add_option("--goal-objects", gen_goal_objects, "goal objects per instance");
  gen->add_option("--blockers", gen_blockers, "exit blockers per instance");
  gen->add_option("--out", gen_out, "output directory")->required();

  // ---- plan ----
  auto* plan = app.add_subcommand("plan", "Run a planner over instances");
  std::string plan_planner = "sahs-hcount";
  std::string plan_instances, plan_out, plan_ranknet, plan_sampler;
  long plan_budget_nodes = 100;
  double plan_budget_seconds = 120.0;
  int plan_seeds = 5;
  int plan_nsmp = 2000, plan_nmp = 5;
  int plan_max_len = -1;
  int plan_pc_L = 2, plan_pc_nfc = 8;
  int plan_rm_vertices = 800;
  double plan_rm_radius = 0.9;
  int plan_greedy_steps = 20, plan_greedy_resets = 10;
  plan->add_option("--planner", plan_planner,
                   "sahs-hcount|sahs-rank|sahs-rank-wgangp|sahs-mse|pc-sahs|greedy");
  plan->add_option("--instances", plan_instances, "instance directory")->required();
  plan->add_option("--budget-nodes", plan_budget_nodes, "node budget (-1 unbounded)");
  plan->add_option("--budget-seconds", plan_budget_seconds, "time budget (-1 unbounded)");
  plan->add_option("--seeds", plan_seeds, "planning seeds per instance");
  plan->add_option("--n-smp", plan_nsmp, "continuous draws per edge");
  plan->add_option("--n-mp", plan_nmp, "motion-planned samples per edge");
  plan->add_option("--max-len", plan_max_len, "plan-length horizon (-1 none)");
  plan->add_option("--pc-L", plan_pc_L, "pc-sahs initial horizon L");
  plan->add_option("--pc-nfc", plan_pc_nfc, "pc-sahs motion budget unit");
  plan->add_option("--rank-net", plan_ranknet, "rank network checkpoint");
  plan->add_option("--sampler", plan_sampler, "learned sampler checkpoint");
  plan->add_option("--roadmap-vertices", plan_rm_vertices, "roadmap size");
  plan->add_option("--connect-radius", plan_rm_radius, "roadmap connect radius");
  plan->add_option("--greedy-steps", plan_greedy_steps, "greedy max steps");
  plan->add_option("--greedy-resets", plan_greedy_resets, "greedy max resets");
  plan->add_option("--out", plan_out, "output directory")->required();

  // ---- collect ----
  auto* collect = app.add_subcommand("collect", "Collect planning episodes");
  std::string col_instances, col_out, col_ranknet;
  std::uint64_t col_seed = 0;
  long col_budget_nodes = 100;
  double col_budget_seconds = 120.0;
  int col_nsmp = 2000, col_nmp = 5;
  int col_rm_vertices = 800;
  double col_rm_radius = 0.9;
  int col_seeds = 1;
  collect->add_option("--instances", col_instances)->required();
  collect->add_option("--seed", col_seed, "base planner seed");
  collect->add_option("--seeds", col_seeds, "planner seeds per instance");
  collect->add_option("--budget-nodes", col_budget_nodes);
  collect->add_option("--budget-seconds", col_budget_seconds);
  collect->add_option("--n-smp", col_nsmp);
  collect->add_option("--n-mp", col_nmp);
  collect->add_option("--rank-net", col_ranknet, "collect with sahs-rank instead of sahs-hcount");
  collect->add_option("--roadmap-vertices", col_rm_vertices);
  collect->add_option("--connect-radius", col_rm_radius);
  collect->add_option("--out", col_out)->required();

  // ---- train-rank ----
  auto* train_rank_cmd = app.add_subcommand("train-rank", "Train the abstract-action ranker");
  std::string tr_episodes, tr_out, tr_loss = "hinge";
  int tr_epochs = 60, tr_batch = 16, tr_dm = 32, tr_hidden = 32;
  double tr_lr = 1e-3;
  std::uint64_t tr_seed = 0;
  train_rank_cmd->add_option("--episodes", tr_episodes)->required();
  train_rank_cmd->add_option("--loss", tr_loss, "hinge|mse");
  train_rank_cmd->add_option("--epochs", tr_epochs);
  train_rank_cmd->add_option("--batch", tr_batch);
  train_rank_cmd->add_option("--lr", tr_lr);
  train_rank_cmd->add_option("--d-m", tr_dm);
  train_rank_cmd->add_option("--hidden", tr_hidden);
  train_rank_cmd->add_option("--seed", tr_seed);
  train_rank_cmd->add_option("--out", tr_out)->required();

  // ---- train-sampler ----
  auto* train_sampler_cmd = app.add_subcommand("train-sampler", "Train the WGAN-GP sampler");
  std::string ts_episodes, ts_out;
  int ts_ntot = 20000, ts_nc = 5, ts_nb = 32, ts_hidden = 64, ts_dz = 4;
  double ts_lr_theta = 1e-4, ts_lr_alpha = 1e-4, ts_lambda = 10.0, ts_min_sep = 0.6;
  std::uint64_t ts_seed = 0;
  train_sampler_cmd->add_option("--episodes", ts_episodes)->required();
  train_sampler_cmd->add_option("--n-tot", ts_ntot);
  train_sampler_cmd->add_option("--n-c", ts_nc);
  train_sampler_cmd->add_option("--n-b", ts_nb);
  train_sampler_cmd->add_option("--lr-theta", ts_lr_theta);
  train_sampler_cmd->add_option("--lr-alpha", ts_lr_alpha);
  train_sampler_cmd->add_option("--lambda-gp", ts_lambda);
  train_sampler_cmd->add_option("--hidden", ts_hidden);
  train_sampler_cmd->add_option("--d-z", ts_dz);
  train_sampler_cmd->add_option("--min-separation", ts_min_sep, "key-config spacing");
  train_sampler_cmd->add_option("--seed", ts_seed);
  train_sampler_cmd->add_option("--out", ts_out)->required();

  // ---- eval-sampler ----
  auto* eval_sampler_cmd = app.add_subcommand("eval-sampler", "KDE-score a trained sampler");
  std::string es_sampler, es_episodes;
  int es_ngen = 100;
  std::uint64_t es_seed = 0;
  eval_sampler_cmd->add_option("--sampler", es_sampler, "sampler directory or checkpoint")->required();
  eval_sampler_cmd->add_option("--episodes", es_episodes)->required();
  eval_sampler_cmd->add_option("--n-gen", es_ngen);
  eval_sampler_cmd->add_option("--seed", es_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      fs::path dir = output_root(gen_out);
      fs::create_directories(dir);
      InstanceConfig cfg;
      cfg.n_movables = gen_movables;
      cfg.n_goal_objects = gen_goal_objects;
      cfg.n_blockers = gen_blockers;
      for (int i = 0; i < gen_n; ++i) {
        Instance inst = generate_instance(mix64(gen_seed, static_cast<std::uint64_t>(i)), cfg);
        char name[64];
        std::snprintf(name, sizeof(name), "instance_%04d.json", i);
        save_instance(inst, (dir / name).string());
      }
      write_manifest(dir, json{{"cmd", "gen"},
                               {"n", gen_n},
                               {"seed", gen_seed},
                               {"movables", gen_movables},
                               {"goal_objects", gen_goal_objects},
                               {"blockers", gen_blockers}});
      std::cout << "wrote " << gen_n << " instances to " << dir << "\n";
      return 0;
    }

    if (*plan) {
      fs::path dir = output_root(plan_out);
      fs::create_directories(dir);
      auto files = instance_files(plan_instances);
      if (files.empty()) {
        std::cerr << "no instances in " << plan_instances << "\n";
        return kExitConfig;
      }
      RankNet ranknet;
      LearnedSampler sampler;
      const bool use_rank = plan_planner == "sahs-rank" || plan_planner == "sahs-rank-wgangp" ||
                            plan_planner == "sahs-mse" || plan_planner == "greedy";
      const bool use_sampler = plan_planner == "sahs-rank-wgangp" || plan_planner == "greedy";
      if (use_rank) {
        if (plan_ranknet.empty()) {
          std::cerr << plan_planner << " needs --rank-net\n";
          return kExitConfig;
        }
        ranknet = RankNet::load(plan_ranknet);
      }
      if (use_sampler) {
        if (plan_sampler.empty()) {
          std::cerr << plan_planner << " needs --sampler\n";
          return kExitConfig;
        }
        sampler = LearnedSampler::load(plan_sampler);
      }

      RoadmapPool pool{{}, {}, plan_rm_vertices, plan_rm_radius, 17};
      struct Task {
        int file_idx;
        std::uint64_t seed;
      };
      std::vector<Task> tasks;
      for (std::size_t i = 0; i < files.size(); ++i)
        for (int s = 0; s < plan_seeds; ++s)
          tasks.push_back({static_cast<int>(i), static_cast<std::uint64_t>(s)});
      std::vector<RunRecord> runs(tasks.size());

      parallel_for(static_cast<int>(tasks.size()), [&](int ti) {
        const Task& task = tasks[ti];
        Instance inst = load_instance(files[task.file_idx].string());
        auto rm = pool.get(inst.env);
        SearchStats stats;
        if (plan_planner == "greedy") {
          GreedyParams gp;
          gp.max_steps = plan_greedy_steps;
          gp.max_resets = plan_greedy_resets;
          gp.seed = task.seed;
          stats = greedy_execute(inst.env, *rm, inst.initial, inst.goal, ranknet, sampler, gp);
        } else if (plan_planner == "pc-sahs") {
          PcSearchParams pp;
          pp.initial_horizon = plan_pc_L;
          pp.n_fc = plan_pc_nfc;
          pp.n_smp = plan_nsmp;
          pp.n_mp = plan_nmp;
          pp.budget = {plan_budget_nodes, plan_budget_seconds};
          pp.seed = task.seed;
          stats = pc_sahs(inst.env, *rm, inst.initial, inst.goal, pp);
        } else {
          SearchParams sp;
          sp.n_smp = plan_nsmp;
          sp.n_mp = plan_nmp;
          sp.budget = {plan_budget_nodes, plan_budget_seconds};
          sp.seed = task.seed;
          if (plan_max_len >= 0) sp.max_len = plan_max_len;
          if (use_rank) sp.ranker = &ranknet;
          if (use_sampler) sp.guidance = &sampler;
          stats = sahs(inst.env, *rm, inst.initial, inst.goal, sp);
        }
        if (stats.solved && !plan_replays_to_goal(inst.env, inst.initial, inst.goal, stats.plan))
          throw std::logic_error("plan failed replay check");
        RunRecord rec;
        rec.instance = files[task.file_idx].filename().string();
        rec.planner = plan_planner;
        rec.seed = task.seed;
        rec.solved = stats.solved;
        rec.nodes = stats.nodes_expanded;
        rec.smplcont = stats.smplcont_calls;
        rec.motion_plans = stats.motion_plans;
        rec.wall_seconds = stats.wall_seconds;
        runs[ti] = rec;
      });

      write_runs_csv(dir / "runs.csv", runs);
      write_summary_csv(dir / "summary.csv", plan_planner, runs);
      write_manifest(dir, json{{"cmd", "plan"},
                               {"planner", plan_planner},
                               {"instances", plan_instances},
                               {"budget_nodes", plan_budget_nodes},
                               {"budget_seconds", plan_budget_seconds},
                               {"seeds", plan_seeds},
                               {"n_smp", plan_nsmp},
                               {"n_mp", plan_nmp},
                               {"roadmap_vertices", plan_rm_vertices},
                               {"connect_radius", plan_rm_radius},
                               {"rank_net", plan_ranknet},
                               {"sampler", plan_sampler}});
      int solved = 0;
      for (const auto& r : runs) solved += r.solved;
      std::cout << plan_planner << ": solved " << solved << "/" << runs.size() << "\n";
      return 0;
    }

    if (*collect) {
      fs::path dir = output_root(col_out);
      fs::create_directories(dir);
      auto files = instance_files(col_instances);
      if (files.empty()) {
        std::cerr << "no instances in " << col_instances << "\n";
        return kExitConfig;
      }
      RankNet ranknet;
      if (!col_ranknet.empty()) ranknet = RankNet::load(col_ranknet);
      RoadmapPool pool{{}, {}, col_rm_vertices, col_rm_radius, 17};
      struct Task {
        int file_idx;
        int seed_idx;
      };
      std::vector<Task> tasks;
      for (std::size_t i = 0; i < files.size(); ++i)
        for (int s = 0; s < col_seeds; ++s) tasks.push_back({static_cast<int>(i), s});
      std::atomic<int> solved{0};
      parallel_for(static_cast<int>(tasks.size()), [&](int ti) {
        const Task& task = tasks[ti];
        Instance inst = load_instance(files[task.file_idx].string());
        auto rm = pool.get(inst.env);
        SearchParams sp;
        sp.n_smp = col_nsmp;
        sp.n_mp = col_nmp;
        sp.budget = {col_budget_nodes, col_budget_seconds};
        sp.seed = mix64(col_seed, static_cast<std::uint64_t>(task.seed_idx));
        if (!col_ranknet.empty()) sp.ranker = &ranknet;
        Episode ep = run_episode(inst, *rm, sp);
        if (ep.solved) ++solved;
        char name[64];
        std::snprintf(name, sizeof(name), "episode_%04d_%02d.json", task.file_idx, task.seed_idx);
        save_episode(ep, (dir / name).string());
      });
      write_manifest(dir, json{{"cmd", "collect"},
                               {"instances", col_instances},
                               {"seed", col_seed},
                               {"seeds", col_seeds},
                               {"budget_nodes", col_budget_nodes},
                               {"budget_seconds", col_budget_seconds},
                               {"rank_net", col_ranknet},
                               {"roadmap_vertices", col_rm_vertices}});
      std::cout << "collected " << tasks.size() << " episodes (" << solved << " solved) in " << dir
                << "\n";
      return 0;
    }

    if (*train_rank_cmd) {
      fs::path dir = output_root(tr_out);
      fs::create_directories(dir);
      std::vector<Episode> train_eps, holdout_eps;
      for (const auto& f : episode_files(tr_episodes)) {
        Episode ep = load_episode(f.string());
        if (!ep.solved) continue;
        (is_holdout_instance(ep.instance.env.seed) ? holdout_eps : train_eps).push_back(std::move(ep));
      }
      auto train_set = build_rank_dataset(train_eps);
      auto holdout_set = build_rank_dataset(holdout_eps);
      if (train_set.empty()) {
        std::cerr << "no solved training episodes in " << tr_episodes << "\n";
        return kExitConfig;
      }
      Rng rng(mix64(tr_seed, 0x4a2e));
      RankNet net(tr_dm, tr_hidden, rng);
      RankTrainConfig cfg;
      cfg.epochs = tr_epochs;
      cfg.batch_size = tr_batch;
      cfg.lr = tr_lr;
      cfg.loss = tr_loss == "mse" ? RankLoss::Mse : RankLoss::Hinge;
      cfg.seed = tr_seed;
      auto curve = train_rank(net, train_set, holdout_set.empty() ? train_set : holdout_set, cfg);
      net.save((dir / "ranknet.json").string());
      std::ofstream csv(dir / "curve.csv");
      csv << "epoch,loss,holdout_top1\n";
      for (const auto& p : curve) csv << p.epoch << "," << p.train_loss << "," << p.holdout_top1 << "\n";
      write_manifest(dir, json{{"cmd", "train-rank"},
                               {"episodes", tr_episodes},
                               {"loss", tr_loss},
                               {"epochs", tr_epochs},
                               {"batch", tr_batch},
                               {"lr", tr_lr},
                               {"d_m", tr_dm},
                               {"hidden", tr_hidden},
                               {"seed", tr_seed},
                               {"train_examples", train_set.size()},
                               {"holdout_examples", holdout_set.size()}});
      std::cout << "trained on " << train_set.size() << " examples; final holdout top-1 = "
                << (curve.empty() ? 0.0 : curve.back().holdout_top1) << "\n";
      return 0;
    }

    if (*train_sampler_cmd) {
      fs::path dir = output_root(ts_out);
      fs::create_directories(dir);
      std::vector<Episode> episodes;
      for (const auto& f : episode_files(ts_episodes)) {
        Episode ep = load_episode(f.string());
        if (ep.solved && !is_holdout_instance(ep.instance.env.seed))
          episodes.push_back(std::move(ep));
      }
      if (episodes.empty()) {
        std::cerr << "no solved training episodes in " << ts_episodes << "\n";
        return kExitConfig;
      }
      KeyConfigSet kcs = extract_key_configs(episode_paths(episodes), ts_min_sep);
      CleanedDataset ds = build_sampler_dataset(episodes, kcs, ts_min_sep);
      const Environment& env = episodes.front().instance.env;

      LearnedSampler sampler;
      sampler.keyconfigs = kcs;
      sampler.tau_v = ts_min_sep;
      WganConfig wcfg;
      wcfg.n_tot = ts_ntot;
      wcfg.n_c = ts_nc;
      wcfg.n_b = ts_nb;
      wcfg.lr_theta = ts_lr_theta;
      wcfg.lr_alpha = ts_lr_alpha;
      wcfg.lambda_gp = ts_lambda;
      wcfg.hidden = ts_hidden;
      wcfg.d_z = ts_dz;
      json bucket_info = json::array();
      for (int r = 0; r < static_cast<int>(env.regions.size()); ++r) {
        for (Phase phase : {Phase::Pick, Phase::Place}) {
          auto bucket = ds.bucket(phase, r);
          bucket_info.push_back(json{{"phase", phase == Phase::Pick ? "pick" : "place"},
                                     {"region", env.regions[r].name},
                                     {"records", bucket.size()}});
          if (bucket.empty()) continue;
          SamplerHead head = train_wgan_gp(bucket, phase, r, env.regions[r].footprint, ds.n_k,
                                           wcfg, mix64(ts_seed, r * 2 + static_cast<int>(phase)));
          std::string tag = (phase == Phase::Pick ? "pick_" : "place_") + env.regions[r].name;
          std::ofstream csv(dir / ("curve_" + tag + ".csv"));
          csv << "step,critic_loss,generator_score,mean_grad_norm\n";
          for (const auto& p : head.curve)
            csv << p.step << "," << p.critic_loss << "," << p.generator_score << ","
                << p.mean_grad_norm << "\n";
          sampler.heads[{static_cast<int>(phase), r}] = std::move(head);
        }
      }
      sampler.save((dir / "sampler.json").string());
      write_manifest(dir, json{{"cmd", "train-sampler"},
                               {"episodes", ts_episodes},
                               {"n_tot", ts_ntot},
                               {"n_c", ts_nc},
                               {"n_b", ts_nb},
                               {"lr_theta", ts_lr_theta},
                               {"lr_alpha", ts_lr_alpha},
                               {"lambda_gp", ts_lambda},
                               {"min_separation", ts_min_sep},
                               {"n_key_configs", ds.n_k},
                               {"records", ds.records.size()},
                               {"buckets", bucket_info},
                               {"seed", ts_seed}});
      std::cout << "trained sampler: " << ds.records.size() << " records, " << ds.n_k
                << " key configs\n";
      return 0;
    }

    if (*eval_sampler_cmd) {
      fs::path sp = es_sampler;
      if (fs::is_directory(sp)) sp /= "sampler.json";
      LearnedSampler sampler = LearnedSampler::load(sp.string());
      std::vector<Episode> episodes;
      for (const auto& f : episode_files(es_episodes)) {
        Episode ep = load_episode(f.string());
        if (ep.solved && is_holdout_instance(ep.instance.env.seed))
          episodes.push_back(std::move(ep));
      }
      if (episodes.empty()) {
        // fall back to all solved episodes when the holdout slice is empty
        for (const auto& f : episode_files(es_episodes)) {
          Episode ep = load_episode(f.string());
          if (ep.solved) episodes.push_back(std::move(ep));
        }
      }
      if (episodes.empty()) {
        std::cerr << "no solved episodes in " << es_episodes << "\n";
        return kExitConfig;
      }
      CleanedDataset ds = build_sampler_dataset(episodes, sampler.keyconfigs, sampler.tau_v);
      double ll = evaluate_kde(sampler, episodes.front().instance.env, ds.records, es_ngen, es_seed);
      std::cout << "mean KDE log-likelihood over " << ds.records.size() << " records: " << ll
                << "\n";
      return 0;
    }
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::string msg = e.what();
    if (msg.rfind("cannot", 0) == 0) return kExitIo;
    return kExitConfig;
  }
  return 0;
}
