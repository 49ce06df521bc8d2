// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "nframes/engine.hpp"

namespace nframes {
namespace {

using json = nlohmann::json;

json load(const std::string& name) {
  std::ifstream in(std::string(NFRAMES_CONFIG_DIR) + "/" + name);
  REQUIRE(in.good());
  return json::parse(in);
}

json small_config() {
  return json::parse(R"({"bundle": {"n": 2, "r": 1},
                         "domain": {"lo": [-1, -1, -1], "hi": [1, 1, 1]},
                         "gamma": [["0", "u1"]]})");
}

// Feeds every constructed change back through the verify command.
void check_round_trip(const json& base, const Report& rep) {
  const auto& changes = rep.doc["constructed"]["changes"];
  REQUIRE(changes.is_array());
  REQUIRE(!changes.empty());
  for (const auto& c : changes) {
    json cfg = base;
    cfg["verify"] = json{{"change", c["change"]}, {"points", c["verify"]["points"]},
                         {"tolerance", c["verify"]["tolerance"]}};
    const Report v = run("verify", cfg);
    CHECK_MESSAGE(v.exit_code == kExitPass, v.text);
    CHECK(v.doc["status"] == "pass");
  }
}

TEST_SUITE("cli") {

TEST_CASE("flatness on the zero connection") {
  const Report rep = run("flatness", load("flat_zero.json"));
  CHECK(rep.exit_code == kExitPass);
  CHECK(rep.doc["status"] == "pass");
  CHECK(rep.doc["residuals"]["max_curvature"] == 0.0);
  CHECK(rep.doc["timing_ms"].is_null());
}

TEST_CASE("machine report key order") {
  const Report rep = run("curvature", load("curvature.json"));
  std::vector<std::string> keys;
  for (const auto& [k, v] : rep.doc.items()) keys.push_back(k);
  const std::vector<std::string> expected{"command", "status", "exit_code", "residuals", "constructed", "details", "timing_ms"};
  CHECK(keys == expected);
  CHECK(rep.doc["residuals"]["max_abs_curvature"] == 1.0);
}

TEST_CASE("twisted connection along a spanning map is obstructed") {
  const Report rep = run("normal-map", load("map_obstruction.json"));
  CHECK(rep.exit_code == kExitFail);
  CHECK(rep.doc["status"] == "obstruction");
  CHECK(std::abs(rep.doc["residuals"]["curvature"].get<double>() - 1.0) < 1e-9);
  CHECK(rep.doc["details"]["maps"][0]["result"] == "obstruction");
}

TEST_CASE("missing gamma entry reports the field path") {
  const Report rep = run("flatness", load("missing_gamma_entry.json"));
  CHECK(rep.exit_code == kExitInput);
  CHECK(rep.doc["error"]["pointer"] == "/gamma/0");
  CHECK(rep.doc["error"]["code"] == "config");
}

TEST_CASE("input errors") {
  json cfg = small_config();
  cfg.erase("gamma");
  Report rep = run("flatness", cfg);
  CHECK(rep.exit_code == kExitInput);
  CHECK(rep.doc["error"]["pointer"] == "/gamma");

  cfg = small_config();
  cfg["gamma"][0][1] = "u1 +";
  rep = run("flatness", cfg);
  CHECK(rep.exit_code == kExitInput);
  CHECK(rep.doc["error"]["code"] == "syntax");
  CHECK(rep.doc["error"]["pointer"] == "/gamma/0/1");

  cfg = small_config();
  cfg["gamma"][0][1] = "u9";
  rep = run("flatness", cfg);
  CHECK(rep.doc["error"]["code"] == "unknown-variable");

  cfg = small_config();
  cfg["domain"]["hi"][0] = -2;
  rep = run("flatness", cfg);
  CHECK(rep.exit_code == kExitInput);
  CHECK(rep.doc["error"]["pointer"] == "/domain");

  cfg = small_config();
  cfg["tolerances"] = json{{"flat", -1}};
  rep = run("flatness", cfg);
  CHECK(rep.doc["error"]["pointer"] == "/tolerances/flat");

  CHECK(run("nonsense", small_config()).exit_code == kExitInput);
  CHECK(run_text("flatness", "{not json").exit_code == kExitInput);
  CHECK(run_file("flatness", "/nonexistent/config.json").exit_code == kExitInput);
}

TEST_CASE("domain violations are input errors") {
  json cfg = small_config();
  cfg["gamma"][0][1] = "log(u1)";
  const Report rep = run("flatness", cfg);
  CHECK(rep.exit_code == kExitInput);
  CHECK(rep.doc["error"]["code"] == "domain");
}

TEST_CASE("vertical paths are input errors") {
  json cfg = small_config();
  cfg["paths"] = json::parse(R"([{"components": ["0", "0", "s1"], "domain": {"lo": [-0.5], "hi": [0.5]}}])");
  const Report rep = run("normal-path", cfg);
  CHECK(rep.exit_code == kExitInput);
  CHECK(rep.doc["error"]["code"] == "vertical-tangent");
}

TEST_CASE("constructed changes re-verify") {
  for (const char* name : {"path_flat.json", "path_nonflat.json"}) {
    const json cfg = load(name);
    const Report rep = run("normal-path", cfg);
    CHECK(rep.exit_code == kExitPass);
    CHECK(rep.doc["status"] == "constructed");
    check_round_trip(cfg, rep);
  }
  const json map = load("map_horizontal.json");
  const Report rm = run("normal-map", map);
  CHECK(rm.exit_code == kExitPass);
  check_round_trip(map, rm);
  const json point = load("normal_point.json");
  const Report rp = run("normal-point", point);
  CHECK(rp.exit_code == kExitPass);
  check_round_trip(point, rp);
}

TEST_CASE("verify rejects a wrong change and a non-admissible change") {
  json cfg = small_config();
  cfg["verify"] = json::parse(R"({"change": ["u1", "u2", "u3"], "points": [[0.5, 0.1, 0.2]]})");
  Report rep = run("verify", cfg);
  CHECK(rep.exit_code == kExitFail);
  CHECK(rep.doc["residuals"]["max_residual"] == doctest::Approx(0.5));
  cfg["verify"]["change"][0] = "u1 + u3";
  rep = run("verify", cfg);
  CHECK(rep.exit_code == kExitFail);
  CHECK(rep.doc["details"]["admissible"] == false);
}

TEST_CASE("machine reports are deterministic and honour overrides") {
  const json cfg = load("map_horizontal.json");
  const Report a = run("normal-map", cfg);
  const Report b = run("normal-map", cfg);
  CHECK(a.machine() == b.machine());
  RunOptions opts;
  opts.grid = 11;
  opts.seed = 3;
  const Report c = run("normal-map", cfg, opts);
  CHECK(c.doc["details"]["maps"][0]["integrability"]["grid"] == 11);
  CHECK(c.machine() != a.machine());
  opts.timing = true;
  CHECK(run("flatness", load("flat_zero.json"), opts).doc["timing_ms"].is_number());
}

TEST_CASE("tolerance override applies to the primary tolerance") {
  RunOptions opts;
  opts.tol = 2.0;
  const Report rep = run("flatness", small_config(), opts);
  CHECK(rep.exit_code == kExitPass);
  CHECK(rep.doc["details"]["tolerance"] == 2.0);
  opts.tol = -1.0;
  CHECK(run("flatness", small_config(), opts).exit_code == kExitInput);
}

TEST_CASE("vector bundle and lift commands") {
  const Report vb = run("vb-normal", load("vb_parallel.json"));
  CHECK(vb.exit_code == kExitPass);
  CHECK(vb.doc["details"]["equivalence"]["fibre_points"] == 200);
  CHECK(vb.doc["details"]["equivalence"]["holds"] == true);
  CHECK(std::abs(vb.doc["details"]["b_end"][0][0].get<double>() - std::exp(-0.5)) < 1e-8);

  const Report lift = run("lift", load("lift_square.json"));
  CHECK(lift.exit_code == kExitPass);
  CHECK(std::abs(lift.doc["details"]["fibre_displacement"][0].get<double>() - 1.0) < 1e-6);

  json out = load("lift_square.json");
  out["lift"]["vertices"][2] = json::array({1, 5});
  CHECK(run("lift", out).exit_code == kExitFail);
}

TEST_CASE("three-index config derives the two-index coefficients") {
  json cfg = load("vb_parallel.json");
  const Report rep = run("flatness", cfg);
  CHECK(rep.exit_code == kExitPass);
  cfg["points"] = json::array({json::array({0.0, 1.0})});
  const Report pt = run("normal-point", cfg);
  CHECK(pt.exit_code == kExitPass);
}

}  // TEST_SUITE

}  // namespace
}  // namespace nframes
