#include "test_util.hpp"

using namespace seqot;
using seqot::testing::brute_force_assignment;
using seqot::testing::random_uniform_cost;

using Tokens = std::vector<std::string>;

TEST(HardMatch, Examples) {
  EXPECT_EQ(hard_match(Tokens{"a", "b", "c"}, Tokens{"a", "b", "c"}), 3u);
  EXPECT_EQ(hard_match(Tokens{"a", "b"}, Tokens{"c", "d"}), 0u);
  EXPECT_EQ(hard_match(Tokens{"a", "a", "b"}, Tokens{"a", "b", "b"}), 2u);
}

TEST(HardMatch, SymmetryAndSelf) {
  const Tokens a{"x", "y", "x", "z", "z", "z"};
  const Tokens b{"z", "x", "w"};
  EXPECT_EQ(hard_match(a, b), hard_match(b, a));
  EXPECT_EQ(hard_match(a, a), a.size());
  EXPECT_EQ(hard_match(Tokens{}, a), 0u);
}

TEST(Hungarian, Examples) {
  const MatchResult a = hungarian(CostMatrix(Matrix{{0.0, 1.0}, {1.0, 0.0}}, CostKind::euclidean));
  EXPECT_EQ(a.assignment, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
  EXPECT_EQ(a.total_cost, 0.0);
  const MatchResult b = hungarian(CostMatrix(Matrix{{4.0, 1.0}, {2.0, 3.0}}, CostKind::euclidean));
  EXPECT_EQ(b.assignment, (std::vector<std::pair<int, int>>{{0, 1}, {1, 0}}));
  EXPECT_EQ(b.total_cost, 3.0);
}

TEST(Hungarian, Random6x6MatchesBruteForce) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 20; ++t) {
    const CostMatrix c = random_uniform_cost(6, rng);
    EXPECT_EQ(hungarian(c).total_cost, brute_force_assignment(c.values()));
  }
}

TEST(Hungarian, AssignmentIsPermutation) {
  std::mt19937_64 rng(42);
  for (int n = 1; n <= 9; ++n) {
    const CostMatrix c = random_uniform_cost(n, rng);
    const MatchResult r = hungarian(c);
    ASSERT_EQ(r.assignment.size(), static_cast<std::size_t>(n));
    std::vector<int> cols;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(r.assignment[static_cast<std::size_t>(i)].first, i);
      cols.push_back(r.assignment[static_cast<std::size_t>(i)].second);
      sum += c(i, cols.back());
    }
    std::sort(cols.begin(), cols.end());
    for (int j = 0; j < n; ++j) EXPECT_EQ(cols[static_cast<std::size_t>(j)], j);
    EXPECT_NEAR(r.total_cost, sum, 1e-9);
  }
}

TEST(Hungarian, AgreesWithExactOracle) {
  std::mt19937_64 rng(43);
  for (int n = 1; n <= 7; ++n) {
    for (int t = 0; t < 5; ++t) {
      const CostMatrix c = random_uniform_cost(n, rng);
      const MatchResult r = hungarian(c);
      const ExactSolution e = exact_solve_uniform(c);
      EXPECT_EQ(r.total_cost / n, e.distance);
      EXPECT_EQ(r.permutation(), e.permutation);
    }
  }
}

TEST(Hungarian, TiesPickLexicographicallySmallest) {
  EXPECT_EQ(hungarian(CostMatrix(Matrix::Ones(4, 4), CostKind::euclidean)).permutation(),
            (std::vector<int>{0, 1, 2, 3}));
  // Two optima: identity (cost 2) and the swap (cost 2).
  const CostMatrix c(Matrix{{1.0, 1.0, 5.0}, {1.0, 1.0, 5.0}, {5.0, 5.0, 0.0}}, CostKind::euclidean);
  EXPECT_EQ(hungarian(c).permutation(), (std::vector<int>{0, 1, 2}));
  const CostMatrix d(Matrix{{2.0, 1.0, 1.0}, {1.0, 2.0, 1.0}, {1.0, 1.0, 2.0}}, CostKind::euclidean);
  EXPECT_EQ(hungarian(d).permutation(), (std::vector<int>{1, 2, 0}));
}

TEST(Hungarian, RejectsNonSquare) {
  EXPECT_THROW(hungarian(CostMatrix(Matrix::Ones(2, 3), CostKind::euclidean)), std::invalid_argument);
}

TEST(Hungarian, PaddingHandlesRectangular) {
  const Matrix c{{3.0, 1.0, 2.0}, {1.0, 5.0, 4.0}};
  const Matrix p = pad_to_square(c);
  ASSERT_EQ(p.rows(), 3);
  EXPECT_EQ(p(2, 0), 50.0);
  const MatchResult r = hungarian(CostMatrix(p, CostKind::euclidean));
  EXPECT_EQ(r.permutation()[0], 1);
  EXPECT_EQ(r.permutation()[1], 0);
}

TEST(Hungarian, OtRelaxationBound) {
  std::mt19937_64 rng(44);
  for (int n = 2; n <= 6; ++n) {
    const CostMatrix c = seqot::testing::random_cosine_cost(n, n, rng);
    const double assign = hungarian(c).total_cost / n;
    const SolverReport r = ipot_solve(c, uniform_weights(static_cast<std::size_t>(n)),
                                      uniform_weights(static_cast<std::size_t>(n)));
    ASSERT_TRUE(r.has_value());
    EXPECT_LE(*r.distance, assign + 1e-6);
    EXPECT_NEAR(*r.distance, assign, 1e-4);
  }
}
