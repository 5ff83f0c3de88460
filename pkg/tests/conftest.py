"""Shared fixtures: a scriptable stand-in for an external simulator binary."""

import json
import sys

import pytest

from models.config import ExternalAdapterConfig

# Modes: ok, fail, partial (fails when ITN coverage > 0.9), nobaseline (fails the
# no-intervention run only), sleep, garbage
STUB = r'''
import json, sys, time
scenario, _, policy, _, seed = sys.argv[1:6]
mode = json.load(open(scenario))["mode"]
itn, irs = (float(x) for x in policy.split(","))
if mode == "fail" or (mode == "partial" and itn > 0.9) or (mode == "nobaseline" and (itn, irs) == (0.0, 0.0)):
    sys.stderr.write("simulator crashed\n")
    sys.exit(3)
if mode == "sleep":
    time.sleep(10)
if mode == "garbage":
    print("this is not json")
    sys.exit(0)
n = 10 if (itn, irs) == (0.0, 0.0) else 4
episode = {"age": 10.0, "duration_days": 12.0, "weight": 0.17, "in_hospital": True,
           "treat_cost": 4.2, "recover_cost": 2.1}
print(json.dumps({"population_size": 100, "episodes": [episode] * n,
                  "deaths": [{"age": 3.0, "in_hospital": False, "death_cost": 0.0}] if n == 10 else []}))
'''


@pytest.fixture
def external_adapter(tmp_path):
    """Factory: external_adapter(mode, **overrides) -> ExternalAdapterConfig running the stub."""
    stub = tmp_path / "stub_sim.py"
    stub.write_text(STUB, encoding="utf-8")

    def make(mode: str, **overrides) -> ExternalAdapterConfig:
        scenario = tmp_path / f"scenario_{mode}.json"
        scenario.write_text(json.dumps({"mode": mode}), encoding="utf-8")
        return ExternalAdapterConfig(command=[sys.executable, str(stub)], scenario_path=str(scenario), **overrides)

    return make
