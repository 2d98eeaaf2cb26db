// seqot: score hypothesis/reference corpora with OT distance, hard matching
// and BLEU; run the gamma sweep, the gradient-flow demo and the matching
// comparison.
#include "seqot/seqot.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace seqot;

constexpr const char* kConfigEnv = "SEQOT_CONFIG";

struct Settings {
  CostKind cost = CostKind::cosine;
  SolverKind solver = SolverKind::ipot;
  SolverConfig solver_config{};
  double tau = kDefaultTau;
  LossWeights weights{};
  std::optional<OovPolicy> oov;
  bool dump_plans = false;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Raw flag values; an option only overrides the config file when it was given.
struct Flags {
  std::string config;
  std::string cost, solver, oov;
  double beta = 0, epsilon = 0, tolerance = 0, tau = 0, gamma_seq = 0, gamma_copy = 0;
  int inner_k = 0, outer_iters = 0, threads = 0;
  std::uint64_t seed = 0;
  bool dump_plans = false;
};

const std::vector<std::string> kConfigKeys = {"cost",  "solver",    "beta",       "inner_k", "epsilon",
                                              "outer_iters", "tolerance", "tau", "gamma_seq", "gamma_copy",
                                              "oov", "dump_plans", "seed", "threads"};

ConfigMap read_config_file(const Flags& f) {
  std::string path = f.config;
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
  if (path.empty()) return {};
  ConfigMap m = load_config(path);
  for (const auto& [k, v] : m)
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), k) == kConfigKeys.end())
      throw InputError(path + ": unknown config key '" + k + "'");
  return m;
}

// Defaults, then the config file, then explicit flags. `solver_base` lets the
// flow command start from its own solver defaults.
Settings resolve(const CLI::App& app, const Flags& f, const SolverConfig& solver_base) {
  const ConfigMap m = read_config_file(f);
  Settings s;
  s.solver_config = solver_base;
  SolverConfig& c = s.solver_config;

  s.cost = parse_cost_kind(config_string(m, "cost", std::string(to_string(s.cost))));
  s.solver = parse_solver_kind(config_string(m, "solver", std::string(to_string(s.solver))));
  c.beta = config_double(m, "beta", c.beta);
  c.inner_k = static_cast<int>(config_int(m, "inner_k", c.inner_k));
  c.epsilon = config_double(m, "epsilon", c.epsilon);
  c.outer_iters = static_cast<int>(config_int(m, "outer_iters", c.outer_iters));
  c.tolerance = config_double(m, "tolerance", c.tolerance);
  s.tau = config_double(m, "tau", s.tau);
  s.weights.gamma_seq = config_double(m, "gamma_seq", s.weights.gamma_seq);
  s.weights.gamma_copy = config_double(m, "gamma_copy", s.weights.gamma_copy);
  if (m.count("oov")) s.oov = parse_oov_policy(m.at("oov"));
  s.dump_plans = config_bool(m, "dump_plans", s.dump_plans);
  s.seed = static_cast<std::uint64_t>(config_int(m, "seed", static_cast<long long>(s.seed)));
  s.threads = static_cast<int>(config_int(m, "threads", s.threads));

  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--cost")) s.cost = parse_cost_kind(f.cost);
  if (given("--solver")) s.solver = parse_solver_kind(f.solver);
  if (given("--beta")) c.beta = f.beta;
  if (given("--inner-k")) c.inner_k = f.inner_k;
  if (given("--epsilon")) c.epsilon = f.epsilon;
  if (given("--outer-iters")) c.outer_iters = f.outer_iters;
  if (given("--tolerance")) c.tolerance = f.tolerance;
  if (given("--tau")) s.tau = f.tau;
  if (given("--gamma-seq")) s.weights.gamma_seq = f.gamma_seq;
  if (given("--gamma-copy")) s.weights.gamma_copy = f.gamma_copy;
  if (given("--oov")) s.oov = parse_oov_policy(f.oov);
  if (given("--dump-plans")) s.dump_plans = f.dump_plans;
  if (given("--seed")) s.seed = f.seed;
  if (given("--threads")) s.threads = f.threads;

  c.validate();
  s.weights.validate();
  if (!(s.tau > 0) || !std::isfinite(s.tau)) throw InputError("tau must be positive");
  if (s.threads < 1) throw InputError("threads must be >= 1");
  return s;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw InputError(path + ": cannot open output file");
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    double v = 0;
    if (!detail::parse_double(item, v)) throw InputError(what + ": not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError(what + ": empty list");
  return out;
}

void read_losses(const std::string& path, std::vector<double>& seq, std::vector<double>& mle) {
  const auto lines = read_lines(path);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto fields = tokenize(lines[k]);
    if (fields.empty()) continue;
    const std::string where = path + ":" + std::to_string(k + 1);
    if (fields.size() != 2) throw InputError(where + ": expected two columns (seq_loss mle_loss)");
    double a = 0, b = 0;
    if (!detail::parse_double(fields[0], a) || !detail::parse_double(fields[1], b))
      throw InputError(where + ": unparseable loss value");
    seq.push_back(a);
    mle.push_back(b);
  }
  if (seq.empty()) throw InputError(path + ": no loss rows");
}

void print_settings(std::ostream& os, const Settings& s) {
  os << "cost = " << to_string(s.cost) << '\n'
     << "solver = " << to_string(s.solver) << '\n'
     << "beta = " << format_number(s.solver_config.beta) << '\n'
     << "inner_k = " << s.solver_config.inner_k << '\n'
     << "epsilon = " << format_number(s.solver_config.epsilon) << '\n'
     << "outer_iters = " << s.solver_config.outer_iters << '\n'
     << "tolerance = " << format_number(s.solver_config.tolerance) << '\n'
     << "tau = " << format_number(s.tau) << '\n'
     << "gamma_seq = " << format_number(s.weights.gamma_seq) << '\n'
     << "gamma_copy = " << format_number(s.weights.gamma_copy) << '\n'
     << "oov = " << (s.oov ? std::string(to_string(*s.oov)) : std::string("auto")) << '\n'
     << "dump_plans = " << (s.dump_plans ? "true" : "false") << '\n'
     << "seed = " << s.seed << '\n'
     << "threads = " << s.threads << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Sequence-level optimal transport scoring"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, std::string("key = value config file (default: $") + kConfigEnv + ")");
  app.add_option("--cost", f.cost, "cosine | euclidean | squared_euclidean");
  app.add_option("--solver", f.solver, "ipot | sinkhorn");
  app.add_option("--beta", f.beta, "IPOT proximal weight");
  app.add_option("--inner-k", f.inner_k, "IPOT inner scaling sweeps");
  app.add_option("--epsilon", f.epsilon, "Sinkhorn kernel scale");
  app.add_option("--outer-iters", f.outer_iters, "maximum outer iterations");
  app.add_option("--tolerance", f.tolerance, "plan-change stopping tolerance");
  app.add_option("--tau", f.tau, "soft-argmax temperature");
  app.add_option("--gamma-seq", f.gamma_seq, "weight of the sequence OT loss");
  app.add_option("--gamma-copy", f.gamma_copy, "weight of the copy OT loss");
  app.add_option("--oov", f.oov, "skip | unk | error");
  app.add_flag("--dump-plans", f.dump_plans, "emit transport plans after each record");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--threads", f.threads, "worker threads for corpus scoring");

  std::string output;
  app.add_option("-o,--output", output, "output file (default stdout)");

  auto* score = app.add_subcommand("score", "score aligned hypothesis/reference corpora");
  std::string hyp, ref, src, embeddings;
  score->add_option("--hyp", hyp, "hypothesis corpus")->required();
  score->add_option("--ref", ref, "reference corpus")->required();
  score->add_option("--src", src, "source corpus (enables ot_copy)");
  score->add_option("--embeddings", embeddings, "embedding file")->required();

  auto* sweep = app.add_subcommand("sweep", "mean combined loss over a gamma grid");
  std::string losses, gammas;
  sweep->add_option("--losses", losses, "file with 'seq_loss mle_loss' per line")->required();
  sweep->add_option("--gammas", gammas, "comma-separated gamma values");

  auto* flow = app.add_subcommand("flow", "discretized Wasserstein gradient flow demo");
  int atoms = 10, dim = 2, max_steps = 500;
  double h = 0.5, eta = 0.1, stop_tv = 0.05;
  flow->add_option("--atoms", atoms, "support size")->capture_default_str();
  flow->add_option("--dim", dim, "support dimension")->capture_default_str();
  flow->add_option("--jko-h", h, "JKO step scale h (W2 weight 1/(2h))")->capture_default_str();
  flow->add_option("--eta", eta, "initial gradient step")->capture_default_str();
  flow->add_option("--max-steps", max_steps, "maximum JKO steps")->capture_default_str();
  flow->add_option("--stop-tv", stop_tv, "stop once TV to the target is at most this")->capture_default_str();

  auto* match = app.add_subcommand("match", "hard match, Hungarian assignment and OT plan for one pair");
  std::string match_a, match_b;
  int random_n = 0;
  match->add_option("--hyp", match_a, "hypothesis sentence");
  match->add_option("--ref", match_b, "reference sentence");
  match->add_option("--embeddings", embeddings, "embedding file");
  match->add_option("--random", random_n, "use n random unit vectors (seeded) instead of sentences");

  auto* show = app.add_subcommand("config", "print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "seqot: " << e.what() << '\n';
    return 1;
  }

  if (*show) {
    const Settings s = resolve(app, f, SolverConfig{});
    Output out(output);
    print_settings(out.stream(), s);
    return 0;
  }

  if (*score) {
    const Settings s = resolve(app, f, SolverConfig{});
    const EmbeddingTable table = load_embeddings(embeddings);
    ScoreOptions opt;
    opt.cost = s.cost;
    opt.solver = s.solver;
    opt.solver_config = s.solver_config;
    opt.oov = s.oov;
    opt.dump_plans = s.dump_plans;
    opt.threads = s.threads;
    const CorpusResult result =
        score_corpus(hyp, ref, src.empty() ? std::nullopt : std::optional<std::string>(src), table, opt);
    Output out(output);
    write_corpus(out.stream(), result);
    return result.summary.failures == 0 ? 0 : 2;
  }

  if (*sweep) {
    resolve(app, f, SolverConfig{});
    std::vector<double> seq, mle;
    read_losses(losses, seq, mle);
    const std::vector<double> grid = gammas.empty() ? default_gamma_grid() : parse_number_list(gammas, "--gammas");
    for (double g : grid)
      if (!(g >= 0) || !std::isfinite(g)) throw InputError("--gammas: gamma must be finite and >= 0");
    Output out(output);
    write_sweep(out.stream(), gamma_sweep(seq, mle, grid));
    return 0;
  }

  if (*flow) {
    const Settings s = resolve(app, f, flow_solver_config());
    if (atoms < 1 || dim < 1) throw InputError("flow: --atoms and --dim must be positive");
    if (max_steps < 1) throw InputError("flow: --max-steps must be >= 1");
    if (!(h > 0) || !(eta > 0)) throw InputError("flow: --h and --eta must be positive");
    const FlowRun run = run_flow(make_demo_flow(atoms, dim, s.seed, h, eta), max_steps, stop_tv, s.solver_config);
    Output out(output);
    write_flow(out.stream(), run);
    return 0;
  }

  if (*match) {
    const Settings s = resolve(app, f, SolverConfig{});
    TokenSequence a, b;
    Matrix sa, sb;
    if (random_n > 0) {
      if (!match_a.empty() || !match_b.empty()) throw InputError("match: --random excludes --hyp/--ref");
      std::mt19937_64 rng(s.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      auto unit_rows = [&](Matrix& m) {
        m = Matrix(random_n, 3);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
          m.row(i).normalize();
        }
      };
      unit_rows(sa);
      unit_rows(sb);
      std::uniform_int_distribution<int> pick(0, random_n - 1);
      for (int i = 0; i < random_n; ++i) a.push_back("w" + std::to_string(pick(rng)));
      for (int i = 0; i < random_n; ++i) b.push_back("w" + std::to_string(pick(rng)));
    } else {
      if (embeddings.empty()) throw InputError("match: --embeddings is required unless --random is given");
      const EmbeddingTable table = load_embeddings(embeddings);
      const OovPolicy policy = s.oov.value_or(default_oov_policy(table));
      // Keep only the tokens that survive OOV handling so words and rows line up.
      auto embed = [&](const std::string& line, TokenSequence& toks, Matrix& rows) {
        const auto idx = lookup_tokens(tokenize(line), table, policy);
        rows = Matrix(static_cast<Eigen::Index>(idx.size()), table.dimension());
        for (std::size_t k = 0; k < idx.size(); ++k) {
          rows.row(static_cast<Eigen::Index>(k)) = table.vectors().row(idx[k]);
          toks.push_back(table.tokens()[static_cast<std::size_t>(idx[k])]);
        }
      };
      embed(match_a, a, sa);
      embed(match_b, b, sb);
      if (sa.rows() != sb.rows() || sa.rows() == 0)
        throw InputError("match: both sentences must embed to the same nonzero length, got " +
                         std::to_string(sa.rows()) + " and " + std::to_string(sb.rows()));
    }
    const CostMatrix c = build_cost_matrix(sa, sb, s.cost);
    const MatchingReport r = compare_matchings(a, b, c, s.solver_config);
    Output out(output);
    write_matching(out.stream(), r);
    return r.ot.status == SolverStatus::numerical_failure ? 2 : 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const seqot::InputError& e) {
    std::cerr << "seqot: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    std::cerr << "seqot: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "seqot: " << e.what() << '\n';
  }
  return 1;
}
