#include <gtest/gtest.h>

#include <sstream>

#include "mfioc/io.hpp"
#include "mfioc/paper_instance.hpp"
#include "test_util.hpp"

namespace mfioc {
namespace {

TEST(SystemJson, RoundTripsNominal) {
  const SystemSpec spec{nominal::system(), nominal::cost(),
                        nominal::initial_state()};
  const Json j = system_to_json(spec);
  const SystemSpec back = system_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.system.A, spec.system.A);
  EXPECT_EQ(back.system.B, spec.system.B);
  EXPECT_EQ(back.cost.Q, spec.cost.Q);
  EXPECT_EQ(back.cost.R, spec.cost.R);
  EXPECT_EQ(back.x0, spec.x0);
}

TEST(SystemJson, MatricesAreRowMajor) {
  const SystemSpec spec{nominal::system(), nominal::cost(),
                        nominal::initial_state()};
  const Json j = system_to_json(spec);
  EXPECT_EQ(j["n"], 3);
  EXPECT_EQ(j["m"], 2);
  EXPECT_EQ(j["B"].size(), 3u);
  EXPECT_EQ(j["B"][0].size(), 2u);
  EXPECT_EQ(j["B"][0][1].get<double>(), 0.343);
  EXPECT_EQ(j["A"][1][0].get<double>(), -0.109);
}

TEST(SystemJson, RejectsMalformedDocuments) {
  const SystemSpec spec{nominal::system(), nominal::cost(),
                        nominal::initial_state()};
  Json missing = system_to_json(spec);
  missing.erase("Q");
  EXPECT_THROW(system_from_json(missing), ArgumentError);

  Json ragged = system_to_json(spec);
  ragged["A"][1] = Json::array({1.0, 2.0});
  EXPECT_THROW(system_from_json(ragged), ArgumentError);

  Json text = system_to_json(spec);
  text["x0"][0] = "one";
  EXPECT_THROW(system_from_json(text), ArgumentError);

  Json zero = system_to_json(spec);
  zero["n"] = 0;
  EXPECT_THROW(system_from_json(zero), ArgumentError);

  EXPECT_THROW(parse_json_text("{not json", "inline"), ArgumentError);
}

TEST(ConfigJson, RoundTripsEveryField) {
  RunConfig c;
  c.horizon = 5.0;
  c.dt = 0.05;
  c.columns = 7;
  c.epsilon = 1e-5;
  c.tol = 1e-9;
  c.max_iter = 123;
  c.sign = SignConvention::kPaper;
  c.seed = 99;
  c.trials = 4;
  c.n = 4;
  c.m = 1;
  c.derivative = DerivativeMethod::kClosedFormOracle;
  c.fd_accuracy = 6;
  c.regularization = 0.0;
  c.enforce_symmetry = false;
  c.thresholds.gain_error = 2e-3;
  const RunConfig back =
      config_from_json(Json::parse(config_to_json(c).dump()));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(back.sign, SignConvention::kPaper);
  EXPECT_EQ(back.derivative, DerivativeMethod::kClosedFormOracle);
  EXPECT_EQ(back.seed, 99u);
}

TEST(ConfigJson, PartialDocumentKeepsDefaults) {
  const RunConfig c = config_from_json(Json::parse(R"({"columns": 6})"));
  EXPECT_EQ(c.columns, 6);
  EXPECT_EQ(c.horizon, 8.0);
  EXPECT_EQ(c.max_iter, 5000);
  EXPECT_EQ(c.sign, SignConvention::kStandard);
}

TEST(ConfigJson, RejectsInvalidValues) {
  EXPECT_THROW(config_from_json(Json::parse(R"({"dt": -1})")), ArgumentError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"sign": "other"})")),
               ArgumentError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"horizon": "long"})")),
               ArgumentError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"typo": 1})")), ArgumentError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"fd_accuracy": 3})")),
               ArgumentError);
}

TEST(ModelJson, RoundTrips) {
  RecoveredModel m;
  m.A_hat = testing::random_matrix(3, 3, 1);
  m.B_hat = testing::random_matrix(3, 2, 2);
  m.Q_hat = Matrix::Identity(3, 3);
  m.R_hat = 2.0 * Matrix::Identity(2, 2);
  m.P_hat = 3.0 * Matrix::Identity(3, 3);
  m.K_hat = m.R_hat.ldlt().solve(m.B_hat.transpose() * m.P_hat);
  const RecoveredModel back =
      model_from_json(Json::parse(model_to_json(m).dump()));
  EXPECT_EQ(back.A_hat, m.A_hat);
  EXPECT_EQ(back.B_hat, m.B_hat);
  EXPECT_TRUE(testing::near(back.K_hat, m.K_hat, 1e-15));
}

TEST(VerificationJson, NonFiniteBecomesNull) {
  Verification v;
  v.traj_mse = std::numeric_limits<double>::infinity();
  const Json j = verification_to_json(v);
  EXPECT_TRUE(j["traj_mse"].is_null());
  EXPECT_TRUE(j["omega_residual"].is_null());
  EXPECT_FALSE(j["passed"].get<bool>());
}

TEST(ErrorJson, CarriesKind) {
  const Json j = error_to_json(InsufficientExcitation("too short"));
  EXPECT_EQ(j["status"], "error");
  EXPECT_EQ(j["error"]["kind"], "insufficient-excitation");
  EXPECT_EQ(j["error"]["message"], "too short");
}

MonteCarloSummary sample_summary() {
  MonteCarloSummary s;
  const double mses[] = {1e-8, 3e-6, 2e-10, std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 4; ++i) {
    TrialRecord r;
    r.trial = i;
    r.seed = 10 + i;
    r.status = i == 3 ? "max-iter" : "converged";
    r.iterations = 100 * (i + 1);
    r.gain_error = 1e-12 * (i + 1);
    r.mse = mses[i];
    r.omega_residual = 1e-10;
    r.passed = i != 3;
    s.trials.push_back(r);
  }
  summarize(s);
  return s;
}

TEST(MonteCarloCsv, RoundTripAndRecomputableStatistics) {
  const MonteCarloSummary s = sample_summary();
  EXPECT_EQ(s.converged, 3);
  EXPECT_EQ(s.failures, 1);
  EXPECT_DOUBLE_EQ(s.median_mse, 1e-8);
  EXPECT_DOUBLE_EQ(s.max_mse, 3e-6);
  std::stringstream buf;
  write_montecarlo_csv(buf, s);
  const MonteCarloSummary back = read_montecarlo_csv(buf, "buffer");
  ASSERT_EQ(back.trials.size(), 4u);
  EXPECT_TRUE(std::isinf(back.trials[3].mse));
  EXPECT_EQ(back.trials[1].mse, 3e-6);
  EXPECT_EQ(back.median_mse, s.median_mse);
  EXPECT_EQ(back.mean_mse, s.mean_mse);
  EXPECT_EQ(back.std_mse, s.std_mse);
  EXPECT_EQ(back.failures, s.failures);
}

TEST(MonteCarloCsv, SingleTrialSummaryEqualsRow) {
  MonteCarloSummary s;
  TrialRecord r;
  r.status = "converged";
  r.mse = 4e-9;
  s.trials.push_back(r);
  summarize(s);
  EXPECT_EQ(s.median_mse, 4e-9);
  EXPECT_EQ(s.mean_mse, 4e-9);
  EXPECT_EQ(s.max_mse, 4e-9);
  EXPECT_EQ(s.std_mse, 0.0);
}

TEST(MonteCarloCsv, RejectsMalformedRows) {
  {
    std::stringstream in("trial,seed\n");
    EXPECT_THROW(read_montecarlo_csv(in, "header"), ArgumentError);
  }
  {
    std::stringstream in(montecarlo_csv_header() + "\n0,1,converged,5\n");
    EXPECT_THROW(read_montecarlo_csv(in, "short"), ArgumentError);
  }
  {
    std::stringstream in(montecarlo_csv_header() +
                         "\n0,1,converged,5,x,1e-9,1e-9,1\n");
    EXPECT_THROW(read_montecarlo_csv(in, "number"), ArgumentError);
  }
}

}  // namespace
}  // namespace mfioc
