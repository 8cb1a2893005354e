#include <doctest.h>

#include <string>

#include "homeoscale/config.h"
#include "homeoscale/errors.h"
#include "oracles.h"

using namespace homeoscale;

namespace {

const char* const kBase = "[synapses]\ni_dc = 3e-10\n[experiment]\nhorizon = 10\n";

bool parses_as_json_default(std::string_view text) {
  return text != "null" && text.find(' ') == std::string_view::npos && text.find("60 s") == std::string_view::npos;
}

}  // namespace

TEST_CASE("parser basics") {
  const RunConfig c = parse_config(
      "# comment\n"
      "[agc]\n"
      "i_ref = 1e-8   # trailing comment\n"
      "\n"
      "[experiment]\n"
      "protocol = fig6\n");
  REQUIRE(c.get("agc.i_ref"));
  CHECK(*c.get("agc.i_ref") == "1e-8");
  CHECK(*c.get("experiment.protocol") == "fig6");
  CHECK_FALSE(c.has("agc.v_g"));
}

TEST_CASE("unknown keys, duplicates and malformed lines are rejected") {
  CHECK_THROWS_AS(parse_config("[agc]\ni_rf = 1e-8\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[agcc]\ni_ref = 1e-8\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[agc]\ni_ref = 1e-8\ni_ref = 2e-8\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("i_ref = 1e-8\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[agc]\ni_ref\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[synapses]\nweights = [1e-9, 2e-9\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[synapses]\nweights = [1e-9,, 2e-9]\n"), ValidationError);
  try {
    parse_config("[agc]\n\ni_rf = 1\n", "my.cfg");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("my.cfg:3") != std::string::npos);
  }
}

TEST_CASE("lists may span lines") {
  const RunConfig c = parse_config(
      "[experiment]\n"
      "dc_schedule = [[20, 6e-10],\n"
      "               [120, 3e-10]]\n"
      "[synapses]\ni_dc = 3e-10\n"
      "[experiment]\nhorizon = 200\n");
  const RunSetup s = build_run(c);
  REQUIRE(s.experiment.dc_schedule.size() == 2);
  CHECK(s.experiment.dc_schedule[1].t == 120.0);
  CHECK(s.experiment.dc_schedule[1].i_dc == 3e-10);
}

TEST_CASE("values are type-checked") {
  CHECK_THROWS_AS(build_run(parse_config(std::string(kBase) + "[agc]\ni_ref = fast\n")),
                  ValidationError);
  CHECK_THROWS_AS(build_run(parse_config(std::string(kBase) + "[experiment]\nstart_locked = 2\n")),
                  ValidationError);
  CHECK_THROWS_AS(build_run(parse_config(std::string(kBase) + "[experiment]\nspike_mode = fuzzy\n")),
                  ValidationError);
  CHECK_THROWS_AS(build_run(parse_config("[experiment]\nprotocol = fig99\n")), ValidationError);
  CHECK_THROWS_AS(build_run(parse_config(std::string(kBase) + "[agc]\nv_g = 3.0\n")),
                  ValidationError);
}

TEST_CASE("protocol-specific keys are rejected elsewhere") {
  CHECK_THROWS_AS(build_run(parse_config(std::string(kBase) + "[experiment]\nt_step = 5\n")),
                  ValidationError);
  CHECK_THROWS_AS(build_run(parse_config("[experiment]\nprotocol = fig6\nstep_ratio = 3\n")),
                  ValidationError);
  CHECK_THROWS_AS(build_run(parse_config("[experiment]\nprotocol = fig10\nn_synapses = 3\n")),
                  ValidationError);
  CHECK_NOTHROW(build_run(parse_config("[experiment]\nprotocol = fig6\nt_step = 30\n")));
}

TEST_CASE("every built-in protocol builds and validates") {
  for (const auto& name : protocol_names()) {
    CAPTURE(name);
    if (name == "custom") continue;
    const RunSetup s = build_run(parse_config("[experiment]\nprotocol = " + name + "\n"));
    CHECK_NOTHROW(s.experiment.validate());
    CHECK(s.experiment.horizon > 0.0);
    CHECK(s.experiment.protocol == name);
  }
}

TEST_CASE("fig6 protocol matches the documented operating point") {
  const RunSetup s = build_run(parse_config("[experiment]\nprotocol = fig6\n"));
  const Experiment& e = s.experiment;
  CHECK(e.model.bank.i_dc == 0.3e-9);
  REQUIRE(e.dc_schedule.size() == 2);
  CHECK(e.dc_schedule[0].t == 20.0);
  CHECK(e.dc_schedule[0].i_dc == 0.6e-9);
  CHECK(e.dc_schedule[1].t == 120.0);
  CHECK(e.model.refs.i_ref == 20e-9);
  CHECK(oracle::rel(rate_from_current(20e-9, e.model.neuron), 100.0) < 1e-12);
  CHECK(oracle::rel(rate_from_current(40e-9, e.model.neuron), 180.0) < 1e-12);
  REQUIRE(e.model.slope_override.has_value());
  CHECK(oracle::rel(predict_recovery_time(2.0, e.model.slope_override->up, e.model.device), 60.0) <
        1e-12);
}

TEST_CASE("recovery target yields to explicit slopes") {
  const RunSetup s =
      build_run(parse_config("[experiment]\nprotocol = fig6\n[agc]\nslope_up = 1e-3\nslope_down = 2e-3\n"));
  CHECK(s.experiment.model.slope_override->up == 1e-3);
  CHECK(s.experiment.model.slope_override->down == 2e-3);
}

TEST_CASE("user keys override protocol defaults") {
  const RunSetup s = build_run(parse_config("[experiment]\nprotocol = fig6\nhorizon = 300\n"));
  CHECK(s.experiment.horizon == 300.0);
  const RunSetup f9 = build_run(parse_config("[experiment]\nprotocol = fig9\n"));
  CHECK(f9.tolerances.sample_interval == doctest::Approx(f9.experiment.horizon / 200.0));
  CHECK(f9.experiment.pinned_sw == true);
}

TEST_CASE("merge replaces keys from the later layer") {
  RunConfig a = parse_config("[agc]\ni_ref = 1e-8\nv_g = 1.5\n");
  a.merge(parse_config("[agc]\ni_ref = 3e-8\n"));
  CHECK(*a.get("agc.i_ref") == "3e-8");
  CHECK(*a.get("agc.v_g") == "1.5");
  CHECK_THROWS_AS(a.set("agc.bogus", "1"), ValidationError);
}

TEST_CASE("help lists every key with its default") {
  const std::string help = config_help();
  for (const auto& k : config_keys()) {
    const std::string leaf(k.key.substr(k.key.find('.') + 1));
    CHECK(help.find(leaf + " = " + std::string(k.default_text)) != std::string::npos);
  }
  for (const char* s : {"[device]", "[leakage]", "[dpi]", "[synapses]", "[neuron]", "[agc]",
                        "[engine]", "[experiment]"})
    CHECK(help.find(s) != std::string::npos);
  for (const auto& name : protocol_names()) CHECK(help.find(name) != std::string::npos);
}

TEST_CASE("sweepable keys are the numeric scalars") {
  const auto keys = sweepable_keys();
  CHECK(std::find(keys.begin(), keys.end(), "agc.v_g") != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "synapses.weights") == keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "experiment.protocol") == keys.end());
}

TEST_CASE("documented defaults equal the built-in defaults") {
  const std::string reference = canonical_text(build_run(parse_config(kBase)).experiment);
  const RunSetup ref_setup = build_run(parse_config(kBase));
  for (const auto& k : config_keys()) {
    const std::string key(k.key);
    if (!parses_as_json_default(k.default_text)) continue;
    if (key == "synapses.i_dc" || key == "experiment.horizon") continue;
    const std::string section = key.substr(0, key.find('.'));
    const std::string leaf = key.substr(key.find('.') + 1);
    const std::string text =
        std::string(kBase) + "[" + section + "]\n" + leaf + " = " + std::string(k.default_text) + "\n";
    CAPTURE(key);
    RunSetup s;
    try {
      s = build_run(parse_config(text));
    } catch (const ValidationError& e) {
      // Protocol-specific keys do not apply to the custom protocol.
      CHECK(std::string(e.what()).find("has no effect") != std::string::npos);
      continue;
    }
    CHECK(canonical_text(s.experiment) == reference);
    CHECK(s.tolerances.gain_drift_eta == ref_setup.tolerances.gain_drift_eta);
    CHECK(s.tolerances.sample_interval == ref_setup.tolerances.sample_interval);
    CHECK(s.tolerances.max_segment == ref_setup.tolerances.max_segment);
  }
}
