#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gradcheck.hpp"
#include "icgsbd/catalog.hpp"
#include "icgsbd/gnn.hpp"
#include "support.hpp"

using namespace icgsbd;
using L = VertexLabel;

namespace {

Graph path3() { return Graph("p", {L::HEX, L::HEX, L::HEX}, {{0, 1}, {1, 2}}); }

Model random_model(std::size_t input_dim, std::size_t hidden, Scenario s, std::uint64_t seed, double dropout = 0.5) {
  std::mt19937_64 rng(seed);
  return init_model({input_dim, hidden, s, dropout}, rng);
}

}  // namespace

// --- layers -------------------------------------------------------------------

TEST(Gcn, ZeroWeightsGiveZeroOutput) {
  const GcnLayer p{Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(3, 2)};
  std::mt19937_64 rng(1);
  const auto out = gcn_forward(testsupport::random_matrix(rng, 3, 2), path3(), p);
  EXPECT_EQ(out, Eigen::MatrixXd::Zero(3, 3));
}

TEST(Gcn, EdgelessGraphWithIdentitySelfWeight) {
  Graph g("e", {L::HEX, L::HEX, L::HEX, L::HEX}, {});
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = testsupport::random_matrix(rng, 4, 3);
  const GcnLayer p{Eigen::MatrixXd::Identity(3, 3), testsupport::random_matrix(rng, 3, 3)};
  EXPECT_EQ(gcn_forward(x, g, p), x);
}

TEST(Gcn, PathSumsIncomingNeighbors) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const GcnLayer p{Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
  Eigen::MatrixXd expected(3, 1);
  expected << 1, 3, 5;
  EXPECT_EQ(gcn_forward(x, path3(), p), expected);
}

TEST(Gcn, MatchesDenseAdjacencyFormula) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto g = testsupport::random_graph(rng, 1, 12, 0.3);
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges()) a(static_cast<Eigen::Index>(e.src), static_cast<Eigen::Index>(e.dst)) = 1.0;
    const Eigen::MatrixXd x = testsupport::random_matrix(rng, n, 3);
    const GcnLayer p{testsupport::random_matrix(rng, 5, 3), testsupport::random_matrix(rng, 5, 3)};
    const Eigen::MatrixXd expected = x * p.self_weight.transpose() + a.transpose() * x * p.neighbor_weight.transpose();
    EXPECT_LT((gcn_forward(x, g, p) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Relu, Examples) {
  Eigen::MatrixXd x(1, 3);
  x << -1, 0, 2;
  Eigen::MatrixXd expected(1, 3);
  expected << 0, 0, 2;
  EXPECT_EQ(relu(x), expected);
  EXPECT_EQ(relu(-Eigen::MatrixXd::Ones(2, 2)), Eigen::MatrixXd::Zero(2, 2));
  std::mt19937_64 rng(4);
  const auto r = testsupport::random_matrix(rng, 5, 5);
  EXPECT_EQ(relu(relu(r)), relu(r));
}

TEST(Pool, Examples) {
  Eigen::VectorXd v(3);
  v << 1, -2, 4;
  EXPECT_EQ(global_mean_pool(v.transpose().replicate(5, 1)), v);
  Eigen::MatrixXd two(2, 4);
  two.row(0).setZero();
  two.row(1).setConstant(2.0);
  EXPECT_EQ(global_mean_pool(two), Eigen::VectorXd::Ones(4));
  std::mt19937_64 rng(5);
  const auto x = testsupport::random_matrix(rng, 7, 3);
  const auto perm = testsupport::random_permutation(rng, 7);
  EXPECT_LT((global_mean_pool(testsupport::permute_rows(x, perm)) - global_mean_pool(x)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Dropout, IdentityCases) {
  std::mt19937_64 rng(6);
  const Eigen::VectorXd r = testsupport::random_matrix(rng, 8, 1);
  EXPECT_EQ(dropout(r, 0.0, &rng, Mode::Training), r);
  EXPECT_EQ(dropout(r, 0.0, nullptr, Mode::Inference), r);
  EXPECT_EQ(dropout(r, 0.5, nullptr, Mode::Inference), r);
}

TEST(Dropout, MonteCarloMeanIsPreserved) {
  std::mt19937_64 rng(7);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(16);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(16);
  for (int t = 0; t < 10000; ++t) {
    const auto d = dropout(ones, 0.5, &rng, Mode::Training);
    for (Eigen::Index i = 0; i < d.size(); ++i) EXPECT_TRUE(d(i) == 0.0 || d(i) == 2.0);
    sum += d;
  }
  sum /= 10000.0;
  for (Eigen::Index i = 0; i < sum.size(); ++i) {
    EXPECT_GE(sum(i), 0.96);
    EXPECT_LE(sum(i), 1.04);
  }
}

TEST(Dropout, RejectsBadRates) {
  std::mt19937_64 rng(8);
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(dropout(r, 1.0, &rng, Mode::Training), std::invalid_argument);
  EXPECT_THROW(dropout(r, -0.1, &rng, Mode::Training), std::invalid_argument);
  EXPECT_THROW(dropout(r, 0.5, nullptr, Mode::Training), std::invalid_argument);
}

// --- forward ------------------------------------------------------------------

TEST(Forward, ZeroParametersGiveBias) {
  auto m = zero_model({2, 8, Scenario::MultiLabel, 0.5});
  m.params.head_bias << 0.1, -0.2, 0.3, -0.4;
  std::mt19937_64 rng(9);
  const auto g = testsupport::acm_matrix_graph();
  const auto x = testsupport::random_matrix(rng, 11, 2);
  EXPECT_EQ(model_forward(g, x, m, Mode::Inference), m.params.head_bias);
}

TEST(Forward, PermutationInvariance) {
  std::mt19937_64 rng(10);
  const auto m = random_model(2, 32, Scenario::MultiLabel, 11);
  for (int t = 0; t < 50; ++t) {
    const auto g = testsupport::random_graph(rng, 2, 15, 0.25);
    const auto x = testsupport::random_matrix(rng, static_cast<Eigen::Index>(g.size()), 2);
    const auto perm = testsupport::random_permutation(rng, g.size());
    const auto a = model_forward(g, x, m, Mode::Inference);
    const auto b = model_forward(testsupport::permute(g, perm), testsupport::permute_rows(x, perm), m, Mode::Inference);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, ShapeChecks) {
  const auto m = random_model(2, 4, Scenario::Binary, 1);
  const auto g = path3();
  EXPECT_THROW(model_forward(g, Eigen::MatrixXd::Zero(2, 2), m, Mode::Inference), ShapeError);
  EXPECT_THROW(model_forward(g, Eigen::MatrixXd::Zero(3, 1), m, Mode::Inference), ShapeError);
}

TEST(Forward, InitBoundsFollowFanIn) {
  const auto m = random_model(2, 16, Scenario::MultiLabel, 12);
  EXPECT_LE(m.params.layers[0].self_weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(2.0));
  EXPECT_LE(m.params.layers[1].neighbor_weight.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_LE(m.params.head_weight.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_EQ(m.params.head_weight.rows(), 4);
  EXPECT_EQ(m.params.layers[0].self_weight.cols(), 2);
}

// Logits for the first default-catalog graph under a seeded initialisation.
// Reference values come from a separate numpy evaluation of the same
// parameters (X W1^T + A^T X W2^T per layer, mean pool, linear head).
TEST(Forward, GoldenLogits) {
  const auto catalog = enumerate_catalog(CatalogSpec{}, NscConfig::tms_default());
  const auto& g = catalog.front();
  ASSERT_EQ(g.id(), "g000000");
  const auto x = build_feature_matrix(g, nullptr);
  const auto m = random_model(1, 64, Scenario::MultiLabel, 20240917, 0.5);
  const auto logits = model_forward(g, x, m, Mode::Inference);
  const double golden[4] = {-0.024610556028290115, -0.030983990074308895, 0.0050242616717827981,
                             0.019848100363507079};
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(logits(i), golden[i], 1e-9) << i;
}

// --- loss ---------------------------------------------------------------------

TEST(Loss, UniformLogits) {
  EXPECT_NEAR(loss(Eigen::VectorXd::Zero(2), LabelArray::binary(1)), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss(Eigen::VectorXd::Constant(4, 3.0), LabelArray::multi_label(true, false)), 2 * std::log(2.0), 1e-15);
}

TEST(Loss, SaturatedMargin) {
  Eigen::VectorXd z(4);
  z << -50, 50, 50, -50;
  EXPECT_LT(loss(z, LabelArray::multi_label(true, false)), 1e-10);
  Eigen::VectorXd b(2);
  b << 50, -50;
  EXPECT_LT(loss(b, LabelArray::binary(0)), 1e-10);
}

TEST(Loss, GradientMatchesFiniteDifference) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd z = testsupport::random_matrix(rng, 4, 1, -3, 3);
    const auto label = LabelArray::multi_label(t % 3 != 0, t % 3 == 2);
    Eigen::VectorXd grad;
    loss(z, label, &grad);
    for (Eigen::Index i = 0; i < 4; ++i) {
      Eigen::VectorXd up = z, down = z;
      up(i) += 1e-6;
      down(i) -= 1e-6;
      EXPECT_NEAR(grad(i), (loss(up, label) - loss(down, label)) / 2e-6, 1e-8);
    }
  }
}

TEST(Loss, ShapeMismatch) { EXPECT_THROW(loss(Eigen::VectorXd::Zero(2), LabelArray::multi_label(true, true)), ShapeError); }

// --- backward -----------------------------------------------------------------

TEST(Backward, FiniteDifferenceMultiLabel) {
  std::mt19937_64 rng(14);
  auto batch = testsupport::random_batch(rng, 5, 4, 12, Scenario::MultiLabel);
  const auto r = testsupport::gradient_check(batch.samples, random_model(2, 8, Scenario::MultiLabel, 15));
  EXPECT_LT(r.max_rel_error, 1e-4) << "abs " << r.max_abs_error;
}

TEST(Backward, FiniteDifferenceBinary) {
  std::mt19937_64 rng(16);
  auto batch = testsupport::random_batch(rng, 5, 4, 12, Scenario::Binary);
  const auto r = testsupport::gradient_check(batch.samples, random_model(2, 8, Scenario::Binary, 17));
  EXPECT_LT(r.max_rel_error, 1e-4) << "abs " << r.max_abs_error;
}

TEST(Backward, SaturatedOptimumHasZeroGradient) {
  // A head bias with margin 100 towards the true classes dominates everything else.
  auto m = random_model(1, 8, Scenario::MultiLabel, 18);
  m.params.head_bias << -50, 50, -50, 50;
  const auto g = testsupport::minimal_graph();
  Sample s{&g, build_feature_matrix(g, nullptr), LabelArray::multi_label(true, true)};
  const auto bg = batch_gradient(std::span<const Sample>(&s, 1), m, Mode::Inference);
  for (auto t : bg.grad.tensors()) {
    for (double v : t) EXPECT_LT(std::abs(v), 1e-8);
  }
}

TEST(Backward, DuplicatedBatchLeavesMeanGradientUnchanged) {
  std::mt19937_64 rng(19);
  auto batch = testsupport::random_batch(rng, 6, 3, 10, Scenario::MultiLabel);
  auto doubled = batch.samples;
  doubled.insert(doubled.end(), batch.samples.begin(), batch.samples.end());
  const auto m = random_model(2, 16, Scenario::MultiLabel, 20);
  const auto a = batch_gradient(batch.samples, m, Mode::Inference);
  const auto b = batch_gradient(doubled, m, Mode::Inference);
  EXPECT_NEAR(a.mean_loss, b.mean_loss, 1e-12);
  const auto ta = a.grad.tensors(), tb = b.grad.tensors();
  for (std::size_t t = 0; t < ta.size(); ++t) {
    for (std::size_t i = 0; i < ta[t].size(); ++i) EXPECT_NEAR(ta[t][i], tb[t][i], 1e-12);
  }
}

TEST(Backward, TrainingModeUsesTheRecordedMask) {
  // with a fixed mask the training-mode gradient is the gradient of the masked network
  std::mt19937_64 rng(21);
  auto batch = testsupport::random_batch(rng, 1, 5, 8, Scenario::Binary);
  const auto m = random_model(2, 8, Scenario::Binary, 22, 0.5);
  const auto& s = batch.samples[0];
  std::mt19937_64 drop(23);
  ForwardCache cache;
  model_forward(*s.graph, s.features, m, Mode::Training, &drop, &cache);
  Eigen::VectorXd dlogits;
  loss(cache.logits, s.label, &dlogits);
  Parameters grad = m.params.zeros_like();
  backward(*s.graph, m, cache, dlogits, grad);
  // the same network with the mask folded into the head weights, run without dropout
  Model folded = m;
  folded.config.dropout_rate = 0.0;
  folded.params.head_weight = m.params.head_weight * cache.mask.asDiagonal();
  const auto ref = batch_gradient(std::span<const Sample>(&s, 1), folded, Mode::Inference);
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_LT((grad.layers[l].self_weight - ref.grad.layers[l].self_weight).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((grad.layers[l].neighbor_weight - ref.grad.layers[l].neighbor_weight).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_LT((grad.head_bias - ref.grad.head_bias).cwiseAbs().maxCoeff(), 1e-12);
}

// --- Adam ---------------------------------------------------------------------

TEST(Adam, FirstStepMovesByLearningRate) {
  const auto m0 = random_model(1, 4, Scenario::Binary, 24);
  Parameters p = m0.params;
  Parameters g = p.zeros_like();
  std::size_t k = 0;
  for (auto t : g.tensors()) {
    for (auto& v : t) v = (k++ % 2 ? 0.3 : -2.0);
  }
  AdamState s(p, {1e-3});
  adam_step(p, g, s);
  const auto before = m0.params.tensors();
  const auto after = p.tensors();
  const auto grads = g.tensors();
  for (std::size_t t = 0; t < after.size(); ++t) {
    for (std::size_t i = 0; i < after[t].size(); ++i) {
      const double moved = before[t][i] - after[t][i];
      EXPECT_NEAR(moved, 1e-3 * (grads[t][i] > 0 ? 1.0 : -1.0), 1e-6);
    }
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  const auto m0 = random_model(1, 4, Scenario::MultiLabel, 25);
  Parameters p = m0.params;
  AdamState s(p);
  for (int i = 0; i < 3; ++i) adam_step(p, p.zeros_like(), s);
  EXPECT_EQ(p, m0.params);
}

TEST(Adam, IdenticalSequencesStayIdentical) {
  const auto m0 = random_model(2, 8, Scenario::MultiLabel, 26);
  Parameters a = m0.params, b = m0.params;
  AdamState sa(a), sb(b);
  std::mt19937_64 rng(27);
  std::normal_distribution<double> z;
  for (int step = 0; step < 20; ++step) {
    Parameters g = a.zeros_like();
    for (auto t : g.tensors()) {
      for (auto& v : t) v = z(rng);
    }
    adam_step(a, g, sa);
    adam_step(b, g, sb);
  }
  EXPECT_EQ(a, b);
}

// --- predict ------------------------------------------------------------------

TEST(Predict, ConsistentMultiLabel) {
  Eigen::VectorXd z(4);
  z << -5, 5, -5, 5;
  const auto p = predict_from_logits(z, Scenario::MultiLabel);
  EXPECT_EQ(p.label, LabelArray::multi_label(true, true));
  EXPECT_FALSE(p.coerced);
  const double expected = 1.0 / (1.0 + std::exp(-10.0));
  EXPECT_NEAR(p.probabilities[1], expected, 1e-15);
  EXPECT_NEAR(p.probabilities[3], expected, 1e-15);
  EXPECT_NEAR(p.probabilities[1], 0.99995, 1e-5);
}

TEST(Predict, InconsistentArrayIsCoerced) {
  Eigen::VectorXd z(4);
  z << 5, -5, -5, 5;
  const auto p = predict_from_logits(z, Scenario::MultiLabel);
  EXPECT_EQ(p.label, LabelArray::multi_label(false, false));
  EXPECT_TRUE(p.coerced);
}

TEST(Predict, BinaryTieGoesToClassZero) {
  const auto p = predict_from_logits(Eigen::VectorXd::Zero(2), Scenario::Binary);
  EXPECT_EQ(p.probabilities[1], 0.5);
  EXPECT_EQ(p.label.binary_class(), 0);
}

TEST(Labels, OnlyThreeMultiLabelArrays) {
  EXPECT_EQ(LabelArray::multi_label(true, true).str(), "0101");
  EXPECT_EQ(LabelArray::multi_label(true, false).str(), "0110");
  EXPECT_EQ(LabelArray::multi_label(false, false).str(), "1010");
  EXPECT_THROW(LabelArray::multi_label(false, true), std::invalid_argument);
  const int bad[4] = {1, 0, 0, 1};
  EXPECT_THROW(LabelArray::from_values(Scenario::MultiLabel, bad), std::invalid_argument);
  const int ok[4] = {0, 1, 1, 0};
  EXPECT_EQ(LabelArray::from_values(Scenario::MultiLabel, ok), LabelArray::multi_label(true, false));
  const int two[2] = {1, 1};
  EXPECT_THROW(LabelArray::from_values(Scenario::Binary, two), std::invalid_argument);
}

// --- training -----------------------------------------------------------------

namespace {

struct SurrogateSet {
  std::vector<Graph> graphs;
  std::vector<Sample> samples;
};

SurrogateSet surrogate_samples(std::size_t count, std::uint64_t seed) {
  SurrogateSet s;
  auto catalog = enumerate_catalog(CatalogSpec{}, NscConfig::tms_default());
  std::mt19937_64 rng(seed);
  std::shuffle(catalog.begin(), catalog.end(), rng);
  catalog.resize(count);
  s.graphs = std::move(catalog);
  for (const auto& g : s.graphs) {
    const auto o = oracle_outcome(g);
    s.samples.push_back({&g, build_feature_matrix(g, nullptr), LabelArray::multi_label(o.compiles, o.simulates)});
  }
  return s;
}

}  // namespace

TEST(Train, LossDecreasesOnSurrogate) {
  const auto data = surrogate_samples(120, 28);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 16;
  cfg.seed = 29;
  const auto r = train(data.samples, {}, cfg);
  ASSERT_EQ(r.history.size(), 60u);
  EXPECT_LT(r.history[49].train_loss, r.history[0].train_loss);
  EXPECT_TRUE(std::isnan(r.history.back().val_accuracy));
}

TEST(Train, SameSeedIsBitIdentical) {
  const auto data = surrogate_samples(60, 30);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 8;
  cfg.seed = 31;
  const std::span<const Sample> all(data.samples);
  const auto a = train(all.subspan(0, 48), all.subspan(48), cfg);
  const auto b = train(all.subspan(0, 48), all.subspan(48), cfg);
  EXPECT_EQ(a.model.params, b.model.params);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_accuracy, b.history[i].val_accuracy);
  }
  cfg.seed = 32;
  const auto c = train(all.subspan(0, 48), all.subspan(48), cfg);
  EXPECT_FALSE(c.model.params == a.model.params);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  const auto data = surrogate_samples(40, 33);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 8;
  cfg.seed = 34;
  cfg.learning_rate = 0.0;
  cfg.dropout = 0.0;
  const auto r = train(data.samples, {}, cfg);
  std::mt19937_64 rng(cfg.seed);
  const auto init = init_model({1, cfg.hidden, cfg.scenario, 0.0}, rng);
  EXPECT_EQ(r.model.params, init.params);
  for (const auto& h : r.history) EXPECT_NEAR(h.train_loss, r.history.front().train_loss, 1e-12);
}

TEST(Train, RejectsBadInput) {
  TrainConfig cfg;
  EXPECT_THROW(train({}, {}, cfg), std::invalid_argument);
  const auto data = surrogate_samples(4, 35);
  cfg.scenario = Scenario::Binary;
  EXPECT_THROW(train(data.samples, {}, cfg), std::invalid_argument);
}

// --- checkpoint ---------------------------------------------------------------

TEST(Checkpoint, RoundTripIsExact) {
  const auto m = random_model(2, 16, Scenario::Binary, 36, 0.25);
  std::stringstream ss;
  write_checkpoint(ss, m, {"pca.txt", 97.5});
  const auto ck = read_checkpoint(ss);
  EXPECT_EQ(ck.model.params, m.params);
  EXPECT_EQ(ck.model.config.hidden, 16u);
  EXPECT_EQ(ck.model.config.input_dim, 2u);
  EXPECT_EQ(ck.model.config.scenario, Scenario::Binary);
  EXPECT_EQ(ck.model.config.dropout_rate, 0.25);
  EXPECT_EQ(ck.meta.pca_reference, "pca.txt");
  EXPECT_EQ(ck.meta.binary_threshold, std::optional<double>(97.5));
}

TEST(Checkpoint, RejectsTruncation) {
  const auto m = random_model(1, 4, Scenario::MultiLabel, 37);
  std::stringstream ss;
  write_checkpoint(ss, m);
  auto text = ss.str();
  std::stringstream cut(text.substr(0, text.size() - 40));
  EXPECT_THROW(read_checkpoint(cut), std::runtime_error);
  std::stringstream bad("icgsbd-model 2\n");
  EXPECT_THROW(read_checkpoint(bad), std::runtime_error);
}
