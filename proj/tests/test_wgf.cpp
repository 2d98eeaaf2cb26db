#include "fd_oracles.hpp"
#include "test_util.hpp"

using namespace seqot;
using namespace seqot::testing;

TEST(KlDivergence, Examples) {
  EXPECT_EQ(kl_divergence(Vector{{0.3, 0.7}}, Vector{{0.3, 0.7}}), 0.0);
  EXPECT_NEAR(kl_divergence(Vector{{1.0, 0.0}}, Vector{{0.5, 0.5}}), std::log(2.0), 1e-12);
  EXPECT_THROW(kl_divergence(Vector{{0.5, 0.5}}, Vector{{1.0, 0.0}}), std::invalid_argument);
  EXPECT_THROW(kl_divergence(Vector{{1.0}}, Vector{{0.5, 0.5}}), std::invalid_argument);
}

TEST(TvDistance, Basic) {
  EXPECT_DOUBLE_EQ(tv_distance(Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(Vector{{0.5, 0.5}}, Vector{{0.25, 0.75}}), 0.25);
}

TEST(W2Squared, Examples) {
  const Matrix two{{0.0}, {1.0}};
  EXPECT_NEAR(w2_squared(Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}, two), 1.0, 1e-12);
  std::mt19937_64 rng(61);
  const Matrix support = random_matrix(5, 2, rng);
  const Vector p{{0.1, 0.2, 0.3, 0.25, 0.15}};
  EXPECT_LE(w2_squared(p, p, support), 1e-6);
}

TEST(W2Squared, UniformMatchesPermutationOracle) {
  std::mt19937_64 rng(62);
  for (int t = 0; t < 5; ++t) {
    const Matrix a = random_matrix(5, 2, rng), b = random_matrix(5, 2, rng);
    // W2 between the uniform measures on a and on b, as a weighting of the stacked support.
    Matrix support(10, 2);
    support << a, b;
    Vector nu = Vector::Zero(10), pd = Vector::Zero(10);
    nu.head(5).setConstant(0.2);
    pd.tail(5).setConstant(0.2);
    const double exact = exact_solve_uniform(build_cost_matrix(b, a, CostKind::squared_euclidean)).distance;
    EXPECT_NEAR(w2_squared(nu, pd, support), exact, 1e-4);
  }
}

TEST(FlowStateType, Validation) {
  FlowState s = make_demo_flow(4, 2, 1);
  EXPECT_NO_THROW(s.validate());
  s.target(0) = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = make_demo_flow(4, 2, 1);
  s.theta = Vector::Zero(3);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = make_demo_flow(4, 2, 1);
  s.h = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(JkoStep, StationaryAtTarget) {
  FlowState s = make_demo_flow(6, 2, 7);
  s.theta = s.target.array().log().matrix();
  const JkoStep step = jko_step(s);
  EXPECT_LE((step.state.theta - s.theta).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE(flow_surrogate(s).grad.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(JkoStep, TwoAtomHandDerived) {
  // Support {0, 1}; nu = (s, 1 - s) with s = sigmoid(a); W2^2 = |s - p0|.
  FlowState st;
  st.support = Matrix{{0.0}, {1.0}};
  st.target = Vector{{0.3, 0.7}};
  st.theta = Vector{{0.4, 0.0}};
  st.h = 0.5;
  st.eta = 0.01;
  const double s = 1.0 / (1.0 + std::exp(-0.4));
  const double p0 = 0.3, p1 = 0.7;
  const double dl_ds = std::log(s / p0) - std::log((1 - s) / p1) + 1.0 / (2 * st.h);
  const double g = s * (1 - s) * dl_ds;

  const SurrogateEval e = flow_surrogate(st);
  EXPECT_NEAR(e.w2, s - p0, 1e-9);
  EXPECT_NEAR(e.grad(0), g, 1e-6);
  EXPECT_NEAR(e.grad(1), -g, 1e-6);

  const JkoStep step = jko_step(st);
  ASSERT_EQ(step.halvings, 0);
  EXPECT_NEAR(step.state.theta(0) - st.theta(0), -st.eta * g, 1e-6);
  EXPECT_NEAR(step.state.theta(1) - st.theta(1), st.eta * g, 1e-6);
}

TEST(JkoStep, NeverIncreasesSurrogate) {
  std::mt19937_64 rng(63);
  for (int t = 0; t < 10; ++t) {
    FlowState s = random_flow_state(rng, 6, 2);
    s.eta = 5.0;
    const JkoStep step = jko_step(s);
    EXPECT_LE(step.loss_after, step.loss_before);
    EXPECT_LE(step.halvings, kMaxHalvings);
    EXPECT_NEAR(flow_surrogate(step.state).loss, step.loss_after, 1e-12);
  }
}

TEST(FlowSurrogate, FiniteDifferenceOnFourAtoms) {
  std::mt19937_64 rng(64);
  const SolverConfig cfg = flow_converged_config();
  for (int t = 0; t < 10; ++t) {
    const FlowState s = random_flow_state(rng);
    const SurrogateEval e = flow_surrogate(s, cfg);
    EXPECT_GE(e.kl, 0.0);
    EXPECT_GE(e.w2, 0.0);
    EXPECT_LE(relative_error(e.grad, fd_surrogate_gradient(s, cfg)), 1e-3);
  }
}

TEST(RunFlow, StartAtTargetStopsImmediately) {
  FlowState s = make_demo_flow(5, 2, 3);
  s.theta = s.target.array().log().matrix();
  const FlowRun run = run_flow(s, 50, 0.05);
  EXPECT_TRUE(run.converged);
  ASSERT_EQ(run.trajectory.size(), 1u);
  EXPECT_LE(run.trajectory[0].tv, 0.05);
}

TEST(RunFlow, SmallDemoConverges) {
  const FlowRun run = run_flow(make_demo_flow(5, 2, 11), 500, 0.05);
  EXPECT_TRUE(run.converged);
  EXPECT_LE(run.trajectory.back().tv, 0.05);
  for (const FlowRecord& r : run.trajectory) {
    EXPECT_GE(r.kl, 0.0);
    EXPECT_GE(r.w2, 0.0);
  }
}

TEST(RunFlow, RejectsBadArguments) {
  EXPECT_THROW(run_flow(make_demo_flow(3, 1, 1), 0, 0.05), std::invalid_argument);
}
