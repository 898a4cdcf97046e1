#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "diffgreeks/bench.hpp"
#include "diffgreeks/checkpoint.hpp"
#include "diffgreeks/errors.hpp"

using namespace diffgreeks;
using nlohmann::json;

namespace {

json exchange_json() {
  return json::parse(R"({
    "r": 0.1, "sigma": [0.4, 0.2], "corr": [[1, 0.4], [0.4, 1]], "s0": [60, 60], "T": 1,
    "option": {"kind": "exchange"}, "closed_form": {}
  })");
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("relative error") {
  CHECK(rerror(8.777591, 8.777591) == 0.0);
  CHECK(rerror(8.777591, 8.777109) == doctest::Approx(5.49e-05).epsilon(1e-3));
  CHECK(rerror(1.0, 0.0) == 1.0);
  CHECK(rerror(-2.0, -1.0) == 0.5);
  CHECK_THROWS_AS(rerror(0.0, 1.0), ZeroReferenceError);
}

TEST_CASE("config parsing errors name the key") {
  json j = exchange_json();
  j.erase("sigma");
  const std::string msg = message_of([&] { parse_config(j, "cfg.json"); });
  CHECK(msg.find("sigma") != std::string::npos);
  CHECK(msg.find("cfg.json") != std::string::npos);
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  json two = exchange_json();
  two["mc"] = json::object();
  CHECK_THROWS_AS(parse_config(two), ConfigError);

  json none = exchange_json();
  none.erase("closed_form");
  CHECK_THROWS_AS(parse_config(none), ConfigError);

  json act = exchange_json();
  act.erase("closed_form");
  act["sdbs"] = {{"activation", "swish"}};
  CHECK(message_of([&] { parse_config(act); }).find("swish") != std::string::npos);

  json ref = exchange_json();
  ref["reference"] = {{"price", {{"value", 1.0}}}};
  CHECK(message_of([&] { parse_config(ref); }).find("source") != std::string::npos);

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config round trip and hash") {
  const ExperimentConfig a = load_config(DIFFGREEKS_CONFIG_DIR "/exchange_sdbs_desk.json");
  CHECK(a.engine == Engine::Sdbs);
  CHECK(a.sdbs.train.n_epoch == 5000);
  CHECK(a.sdbs.train.steps == 50);
  CHECK(a.sdbs.train.batch == 1000);
  const ExperimentConfig b = parse_config(to_json(a));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(to_json(a).dump() == to_json(b).dump());
  ExperimentConfig c = a;
  c.sdbs.train.w = 0.5;
  CHECK(config_hash(a) != config_hash(c));
  c = a;
  c.label = "renamed";
  CHECK(config_hash(a) == config_hash(c));
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("closed-form experiment rows") {
  const ExperimentConfig cfg = load_config(DIFFGREEKS_CONFIG_DIR "/exchange_closed_form.json");
  const std::vector<ReportRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].quantity == "price");
  CHECK(rows[1].quantity == "delta_1");
  CHECK(rows[2].quantity == "gamma_1");
  CHECK(rows[3].quantity == "theta");
  for (const ReportRow& r : rows) {
    CAPTURE(r.quantity);
    REQUIRE(r.reference);
    REQUIRE(r.rerror);
    CHECK(*r.rerror == rerror(*r.reference, r.estimate));
    CHECK(r.provenance == "Table 3 exact");
  }
  CHECK(*rows[0].rerror < 1e-7);
}

TEST_CASE("engine failures carry the config origin") {
  json j = exchange_json();
  j.erase("closed_form");
  j["fdm"] = {{"m_s", 100}, {"m_t", 100}, {"stability", "strict"}};
  const ExperimentConfig cfg = parse_config(j, "unstable.json");
  const std::string msg = message_of([&] { run_experiment(cfg); });
  CHECK(msg.find("unstable.json") != std::string::npos);
  CHECK(msg.find("CFL") != std::string::npos);
}

TEST_CASE("suite catalogue") {
  BenchOptions opts;
  CHECK(suite_names().size() == 6);
  CHECK(suite_configs("table3", opts).size() == 3);
  opts.full = true;
  CHECK(suite_configs("table3", opts).size() == 5);
  opts.full = false;
  CHECK(suite_configs("table6", opts).size() == 12);
  CHECK(suite_configs("table4_desk", opts).size() == 3);
  CHECK(suite_configs("table8_desk", opts).size() == 7);
  CHECK(suite_configs("activation_desk", opts).size() == 7);
  opts.max_paths = 1000;
  opts.max_epochs = 2;
  for (const auto& c : suite_configs("table6", opts)) CHECK(c.mc.paths == 1000);
  for (const auto& c : suite_configs("table4_desk", opts)) CHECK(c.sdbs.train.n_epoch == 2);

  const std::string msg = message_of([&] { suite_configs("table7", opts); });
  CHECK(msg.find("table3") != std::string::npos);
  CHECK(msg.find("activation_desk") != std::string::npos);
  CHECK_THROWS_AS(bench_suite("table7", opts), UsageError);
}

TEST_CASE("reports are deterministic and well-formed") {
  BenchOptions opts;
  opts.max_paths = 2000;
  opts.timing = false;
  const std::vector<ReportRow> a = bench_suite("table5", opts);
  const std::vector<ReportRow> b = bench_suite("table5", opts);
  std::ostringstream ca, cb;
  write_csv(ca, a);
  write_csv(cb, b);
  CHECK(ca.str() == cb.str());
  CHECK(report_json(a).dump() == report_json(b).dump());
  const std::string csv = ca.str();
  CHECK(csv.substr(0, csv.find('\n')) == "suite,quantity,estimate,reference,rerror,std_err,runtime_ms,provenance");
  for (const ReportRow& r : a) {
    CHECK_FALSE(r.failed);
    CHECK(r.suite == "table5");
    CHECK(r.runtime_ms == 0.0);
    CHECK(r.rerror.has_value() == (r.reference.has_value() && *r.reference != 0.0));
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(8.77759099878) == "8.77759099878");
  CHECK(format_number(-4.33928093773) == "-4.33928093773");
}

TEST_CASE("reference data file") {
  const json refs = load_reference_values(DIFFGREEKS_DATA_DIR);
  CHECK(refs.at("table3").at("columns").at("exact").at("price").get<double>() == 8.777591);
  CHECK(refs.at("table3").at("columns").at("fdm1").at("price").get<double>() == 8.765359);
  CHECK(refs.at("table3").contains("source"));
  CHECK(refs.at("table6").contains("source"));
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const ExperimentConfig cfg = load_config(DIFFGREEKS_CONFIG_DIR "/exchange_sdbs_desk.json");
  Checkpoint ck;
  ck.net = init_params(default_widths(2), Activation::make(ActivationKind::Softplus), 77);
  // awkward values that a lossy printer would mangle
  ck.net.params()[0] = 0.1 + 0.2;
  ck.net.params()[1] = 1e-300;
  ck.net.params()[2] = -std::nextafter(1.0, 2.0);
  ck.config = cfg;
  ck.config_hash = config_hash(cfg);
  ck.best_epoch = 4321;
  ck.best_loss = 0.123456789012345678;
  const std::string path = DIFFGREEKS_TEST_TMP "/roundtrip.ckpt.json";
  save_checkpoint(ck, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.net == ck.net);
  CHECK(back.config_hash == ck.config_hash);
  CHECK(back.best_epoch == 4321);
  CHECK(back.best_loss == ck.best_loss);
  REQUIRE(back.config);
  CHECK(config_hash(*back.config) == ck.config_hash);

  json tampered = to_json(ck);
  tampered["config"]["sdbs"]["w"] = 2.0;
  CHECK_THROWS_AS(checkpoint_from_json(tampered), ConfigError);
  json wrong = to_json(ck);
  wrong["format"] = "something-else";
  CHECK_THROWS_AS(checkpoint_from_json(wrong), ConfigError);
}

}
