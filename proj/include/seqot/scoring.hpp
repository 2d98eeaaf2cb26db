// Per-pair and corpus scoring: OT distances, hard matching and BLEU, with a
// tab-separated record stream.
#pragma once

#include "seqot/bleu.hpp"
#include "seqot/core.hpp"
#include "seqot/cost.hpp"
#include "seqot/embed.hpp"
#include "seqot/matching.hpp"
#include "seqot/solvers.hpp"
#include "seqot/text.hpp"
#include "seqot/wgf.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace seqot {

inline constexpr const char* kRecordHeader = "seqot-records v1";
inline constexpr const char* kSweepHeader = "seqot-sweep v1";

enum class SolverKind { ipot, sinkhorn };

inline SolverKind parse_solver_kind(std::string_view s) {
  if (s == "ipot") return SolverKind::ipot;
  if (s == "sinkhorn") return SolverKind::sinkhorn;
  throw InputError("unknown solver '" + std::string(s) + "'");
}

inline std::string_view to_string(SolverKind k) { return k == SolverKind::ipot ? "ipot" : "sinkhorn"; }

inline SolverReport solve(SolverKind kind, const CostMatrix& c, Vector u, Vector v, const SolverConfig& cfg) {
  return kind == SolverKind::ipot ? ipot_solve(c, std::move(u), std::move(v), cfg)
                                  : sinkhorn_solve(c, std::move(u), std::move(v), cfg);
}

struct ScoreOptions {
  CostKind cost = CostKind::cosine;
  SolverKind solver = SolverKind::ipot;
  SolverConfig solver_config{};
  std::optional<OovPolicy> oov;  // unset: table default
  bool dump_plans = false;
  int threads = 1;
};

enum class RecordStatus { ok, max_iters, numerical_failure, degenerate };

inline std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::ok: return "ok";
    case RecordStatus::max_iters: return "max_iters";
    case RecordStatus::numerical_failure: return "numerical_failure";
    case RecordStatus::degenerate: return "degenerate";
  }
  return "?";
}

struct ScoreRecord {
  long pair_id = 0;
  std::optional<double> ot_seq;
  std::optional<double> ot_copy;
  std::array<double, 4> bleu{};  // BLEU-1 .. BLEU-4
  std::size_t hard_match = 0;
  std::size_t len_hyp = 0;
  std::size_t len_ref = 0;
  std::optional<std::size_t> len_src;
  RecordStatus status = RecordStatus::ok;
  std::optional<TransportPlan> seq_plan;  // kept only when plans are dumped

  bool failed() const { return status == RecordStatus::numerical_failure || status == RecordStatus::degenerate; }
};

namespace detail {

struct Leg {
  std::optional<double> distance;
  std::optional<TransportPlan> plan;
  RecordStatus status = RecordStatus::ok;
};

inline Leg ot_leg(const std::vector<Eigen::Index>& a, const std::vector<Eigen::Index>& b, const EmbeddingTable& table,
                  const ScoreOptions& opt) {
  Leg leg;
  if (a.empty() || b.empty()) {
    leg.status = RecordStatus::degenerate;
    return leg;
  }
  Matrix sa(static_cast<Eigen::Index>(a.size()), table.dimension());
  Matrix sb(static_cast<Eigen::Index>(b.size()), table.dimension());
  for (std::size_t k = 0; k < a.size(); ++k) sa.row(static_cast<Eigen::Index>(k)) = table.vectors().row(a[k]);
  for (std::size_t k = 0; k < b.size(); ++k) sb.row(static_cast<Eigen::Index>(k)) = table.vectors().row(b[k]);
  const CostMatrix c = build_cost_matrix(sa, sb, opt.cost);
  SolverReport r = solve(opt.solver, c, uniform_weights(a.size()), uniform_weights(b.size()), opt.solver_config);
  switch (r.status) {
    case SolverStatus::ok: leg.status = RecordStatus::ok; break;
    case SolverStatus::max_iters: leg.status = RecordStatus::max_iters; break;
    case SolverStatus::numerical_failure: leg.status = RecordStatus::numerical_failure; return leg;
  }
  leg.distance = r.distance;
  leg.plan = std::move(r.plan);
  return leg;
}

inline int severity(RecordStatus s) {
  switch (s) {
    case RecordStatus::ok: return 0;
    case RecordStatus::max_iters: return 1;
    case RecordStatus::numerical_failure: return 2;
    case RecordStatus::degenerate: return 3;
  }
  return 3;
}

}  // namespace detail

/// Scores one hypothesis against its reference and, optionally, the source.
inline ScoreRecord score_pair(const TokenSequence& hyp, const TokenSequence& ref, const TokenSequence* src,
                              const EmbeddingTable& table, const ScoreOptions& opt, long pair_id = 0) {
  const OovPolicy policy = opt.oov.value_or(default_oov_policy(table));
  ScoreRecord rec;
  rec.pair_id = pair_id;
  rec.len_hyp = hyp.size();
  rec.len_ref = ref.size();
  rec.hard_match = hard_match(hyp, ref);
  for (int n = 1; n <= 4; ++n) rec.bleu[static_cast<std::size_t>(n - 1)] = bleu_n(hyp, {ref}, n);

  const auto hyp_rows = lookup_tokens(hyp, table, policy);
  const auto ref_rows = lookup_tokens(ref, table, policy);
  detail::Leg seq = detail::ot_leg(hyp_rows, ref_rows, table, opt);
  rec.status = seq.status;
  std::optional<detail::Leg> copy;
  if (src) {
    rec.len_src = src->size();
    copy = detail::ot_leg(hyp_rows, lookup_tokens(*src, table, policy), table, opt);
    if (detail::severity(copy->status) > detail::severity(rec.status)) rec.status = copy->status;
  }
  if (rec.failed()) return rec;
  rec.ot_seq = seq.distance;
  if (copy) rec.ot_copy = copy->distance;
  if (opt.dump_plans) rec.seq_plan = std::move(seq.plan);
  return rec;
}

inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

/// pair_id ot_seq ot_copy bleu1..bleu4 hard_match len_hyp len_ref len_src status
inline std::string format_record(const ScoreRecord& r) {
  auto opt = [](const auto& v) -> std::string {
    if (!v) return "-";
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(*v)>>)
      return format_number(*v);
    else
      return std::to_string(*v);
  };
  std::string s = std::to_string(r.pair_id);
  s += '\t' + opt(r.ot_seq);
  s += '\t' + opt(r.ot_copy);
  for (double b : r.bleu) s += '\t' + format_number(b);
  s += '\t' + std::to_string(r.hard_match);
  s += '\t' + std::to_string(r.len_hyp);
  s += '\t' + std::to_string(r.len_ref);
  s += '\t' + opt(r.len_src);
  s += '\t';
  s += to_string(r.status);
  return s;
}

/// "#plan <pair_id> <rows> <cols> <row-major values>"
inline std::string format_plan(long pair_id, const TransportPlan& plan) {
  std::string s = "#plan\t" + std::to_string(pair_id) + '\t' + std::to_string(plan.rows()) + '\t' +
                  std::to_string(plan.cols());
  for (Eigen::Index i = 0; i < plan.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.cols(); ++j) s += '\t' + format_number(plan.matrix()(i, j));
  return s;
}

struct CorpusSummary {
  std::size_t pairs = 0;
  std::optional<double> mean_ot_seq;
  std::optional<double> mean_ot_copy;
  double corpus_bleu4 = 0.0;
  std::size_t failures = 0;
};

inline std::string format_summary(const CorpusSummary& s) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("-"); };
  return "#summary\tpairs=" + std::to_string(s.pairs) + "\tmean_ot_seq=" + opt(s.mean_ot_seq) +
         "\tmean_ot_copy=" + opt(s.mean_ot_copy) + "\tcorpus_bleu4=" + format_number(s.corpus_bleu4) +
         "\tfailures=" + std::to_string(s.failures);
}

struct CorpusResult {
  std::vector<ScoreRecord> records;
  CorpusSummary summary;
};

/// Scores aligned sentence lists. Pairs may be computed on several threads;
/// records are always returned in input order.
inline CorpusResult score_corpus_lines(const std::vector<std::string>& hyp_lines,
                                       const std::vector<std::string>& ref_lines,
                                       const std::vector<std::string>* src_lines, const EmbeddingTable& table,
                                       const ScoreOptions& opt) {
  if (hyp_lines.size() != ref_lines.size())
    throw InputError("line count mismatch: hypothesis has " + std::to_string(hyp_lines.size()) +
                     " lines, reference has " + std::to_string(ref_lines.size()));
  if (src_lines && src_lines->size() != hyp_lines.size())
    throw InputError("line count mismatch: hypothesis has " + std::to_string(hyp_lines.size()) +
                     " lines, source has " + std::to_string(src_lines->size()));
  opt.solver_config.validate();
  if (opt.oov == OovPolicy::unk && !table.contains(kUnkToken))
    throw InputError("OOV policy 'unk' requires an UNK row in the embedding table");

  const std::size_t n = hyp_lines.size();
  std::vector<TokenSequence> hyps(n), refs(n), srcs(src_lines ? n : 0);
  for (std::size_t k = 0; k < n; ++k) {
    hyps[k] = tokenize(hyp_lines[k]);
    refs[k] = tokenize(ref_lines[k]);
    if (src_lines) srcs[k] = tokenize((*src_lines)[k]);
  }

  CorpusResult out;
  out.records.resize(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        out.records[k] = score_pair(hyps[k], refs[k], src_lines ? &srcs[k] : nullptr, table, opt,
                                    static_cast<long>(k + 1));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(opt.threads, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  CorpusSummary& s = out.summary;
  s.pairs = n;
  double seq_sum = 0.0, copy_sum = 0.0;
  std::size_t seq_n = 0, copy_n = 0;
  std::vector<std::vector<TokenSequence>> ref_sets;
  ref_sets.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const ScoreRecord& r = out.records[k];
    if (r.ot_seq) seq_sum += *r.ot_seq, ++seq_n;
    if (r.ot_copy) copy_sum += *r.ot_copy, ++copy_n;
    if (r.failed()) ++s.failures;
    ref_sets.push_back({refs[k]});
  }
  if (seq_n) s.mean_ot_seq = seq_sum / static_cast<double>(seq_n);
  if (copy_n) s.mean_ot_copy = copy_sum / static_cast<double>(copy_n);
  if (n > 0) s.corpus_bleu4 = corpus_bleu(hyps, ref_sets, 4);
  return out;
}

inline CorpusResult score_corpus(const std::string& hyp_file, const std::string& ref_file,
                                 const std::optional<std::string>& src_file, const EmbeddingTable& table,
                                 const ScoreOptions& opt) {
  const auto hyp = read_lines(hyp_file);
  const auto ref = read_lines(ref_file);
  std::optional<std::vector<std::string>> src;
  if (src_file) src = read_lines(*src_file);
  try {
    return score_corpus_lines(hyp, ref, src ? &*src : nullptr, table, opt);
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind("line count mismatch", 0) == 0)
      throw InputError(msg + " (" + hyp_file + ", " + ref_file + (src_file ? ", " + *src_file : "") + ")");
    throw;
  }
}

inline void write_corpus(std::ostream& os, const CorpusResult& result) {
  os << kRecordHeader << '\n';
  for (const ScoreRecord& r : result.records) {
    os << format_record(r) << '\n';
    if (r.seq_plan) os << format_plan(r.pair_id, *r.seq_plan) << '\n';
  }
  os << format_summary(result.summary) << '\n';
}

// --- gamma sweep -------------------------------------------------------------

inline const std::vector<double>& default_gamma_grid() {
  static const std::vector<double> grid{0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0};
  return grid;
}

struct SweepRow {
  double gamma = 0.0;
  double mean_loss = 0.0;
};

/// Mean of mle_i + gamma * seq_i for each gamma.
inline std::vector<SweepRow> gamma_sweep(const std::vector<double>& seq_losses, const std::vector<double>& mle_losses,
                                         const std::vector<double>& gammas) {
  detail::require(!seq_losses.empty() && !gammas.empty(), "gamma_sweep: empty input");
  detail::require(seq_losses.size() == mle_losses.size(),
                  "gamma_sweep: " + std::to_string(seq_losses.size()) + " sequence losses but " +
                      std::to_string(mle_losses.size()) + " MLE losses");
  std::vector<SweepRow> rows;
  rows.reserve(gammas.size());
  for (double g : gammas) {
    const LossWeights w{g, 0.0};
    double sum = 0.0;
    for (std::size_t i = 0; i < seq_losses.size(); ++i) sum += combined_loss(mle_losses[i], seq_losses[i], 0.0, w);
    rows.push_back({g, sum / static_cast<double>(seq_losses.size())});
  }
  return rows;
}

inline void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepHeader << '\n';
  for (const SweepRow& r : rows) os << format_number(r.gamma) << '\t' << format_number(r.mean_loss) << '\n';
}

// --- flow trajectories -------------------------------------------------------

inline constexpr const char* kFlowHeader = "seqot-flow v1";

inline void write_flow(std::ostream& os, const FlowRun& run) {
  os << kFlowHeader << '\n';
  for (const FlowRecord& r : run.trajectory)
    os << r.step << '\t' << format_number(r.kl) << '\t' << format_number(r.w2) << '\t' << format_number(r.tv) << '\n';
  os << "#final\tsteps=" << run.trajectory.size() << "\tconverged=" << (run.converged ? 1 : 0) << '\n';
}

// --- matching taxonomy -------------------------------------------------------

inline constexpr const char* kMatchHeader = "seqot-match v1";

/// The three matching schemes side by side for one pair of sequences.
struct MatchingReport {
  std::size_t hard_match = 0;
  MatchResult assignment;
  double assignment_mean = 0.0;  // total_cost / n
  SolverReport ot;
};

/// Square inputs only: the assignment and the OT plan share uniform marginals,
/// so the OT distance is bounded by the assignment cost divided by n.
inline MatchingReport compare_matchings(const TokenSequence& a, const TokenSequence& b, const CostMatrix& c,
                                        const SolverConfig& cfg = {}) {
  detail::require(c.rows() == c.cols(), "compare_matchings: cost matrix must be square");
  detail::require(static_cast<Eigen::Index>(a.size()) == c.rows() && static_cast<Eigen::Index>(b.size()) == c.cols(),
                  "compare_matchings: token counts do not match the cost matrix");
  MatchingReport r;
  r.hard_match = hard_match(a, b);
  r.assignment = hungarian(c);
  r.assignment_mean = r.assignment.total_cost / static_cast<double>(c.rows());
  r.ot = ipot_solve(c, uniform_weights(a.size()), uniform_weights(b.size()), cfg);
  return r;
}

inline void write_matching(std::ostream& os, const MatchingReport& r) {
  os << kMatchHeader << '\n';
  os << "hard_match\t" << r.hard_match << '\n';
  os << "assignment";
  for (const auto& [i, j] : r.assignment.assignment) os << '\t' << i << ':' << j;
  os << '\n';
  os << "assignment_cost\t" << format_number(r.assignment.total_cost) << '\t' << format_number(r.assignment_mean)
     << '\n';
  os << "ot_distance\t" << (r.ot.distance ? format_number(*r.ot.distance) : std::string("-")) << '\t'
     << to_string(r.ot.status) << '\n';
  if (r.ot.plan) os << format_plan(0, *r.ot.plan) << '\n';
}

}  // namespace seqot
