#include "arw.h"

#include <new>
#include <string>
#include <utility>
#include <vector>

#include "arw/experiments.hpp"
#include "arw/version.hpp"

namespace {

thread_local std::string g_last_error;

arw_status set_error(arw_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

arw_status from_exception() {
  try {
    throw;
  } catch (const arw::Error& e) {
    switch (e.code()) {
      case arw::Errc::invalid_argument:
        return set_error(ARW_EINVAL, e.what());
      case arw::Errc::empty_sample:
        return set_error(ARW_EINVAL, e.what());
      default:
        return set_error(ARW_ERUNTIME, e.what());
    }
  } catch (const std::bad_alloc& e) {
    return set_error(ARW_ENOMEM, e.what());
  } catch (const std::exception& e) {
    return set_error(ARW_EINTERNAL, e.what());
  } catch (...) {
    return set_error(ARW_EINTERNAL, "unknown error");
  }
}

void fill_report(const arw::StabilizationReport& rep, arw_report* out) {
  out->exits_left = rep.exits_left;
  out->exits_right = rep.exits_right;
  out->exits_ejected = rep.exits_ejected;
  out->sleepers_remaining = rep.sleepers_remaining;
  out->topplings = rep.topplings;
  out->visited_count = static_cast<int64_t>(rep.visited.size());
  out->visited_lo = rep.visited.empty() ? 1 : rep.visited.front();
  out->visited_hi = rep.visited.empty() ? 0 : rep.visited.back();
  out->fuel_exhausted = rep.fuel_exhausted ? 1 : 0;
}

}  // namespace

struct arw_tape {
  arw::InstructionTape tape;
};

struct arw_plan {
  std::vector<std::pair<std::string, std::string>> kv;
};

struct arw_result {
  arw::ResultDocument doc;
  mutable std::string rendered;
  mutable std::string meta;
};

extern "C" {

const char* arw_version(void) { return arw::kVersion; }

const char* arw_last_error(void) { return g_last_error.c_str(); }

uint64_t arw_derive_replica_seed(uint64_t master_seed, uint64_t replica_index) {
  return arw::derive_replica_seed(master_seed, replica_index);
}

arw_status arw_tape_create(double lambda, double p, uint64_t seed, arw_tape** out) {
  if (!out) return set_error(ARW_EINVAL, "out must not be null");
  try {
    *out = new arw_tape{arw::InstructionTape(arw::ModelParams{lambda, p}, seed)};
    return ARW_OK;
  } catch (...) {
    return from_exception();
  }
}

arw_status arw_tape_create_ejector(const arw_tape* base, int64_t site, uint64_t threshold_k,
                                   arw_tape** out) {
  if (!base || !out) return set_error(ARW_EINVAL, "base and out must not be null");
  try {
    *out = new arw_tape{arw::InstructionTape::with_ejector(base->tape, site, threshold_k)};
    return ARW_OK;
  } catch (...) {
    return from_exception();
  }
}

arw_status arw_tape_instruction_at(const arw_tape* tape, int64_t site, uint64_t j,
                                   arw_instruction* out) {
  if (!tape || !out) return set_error(ARW_EINVAL, "tape and out must not be null");
  if (j < 1) return set_error(ARW_EINVAL, "instruction index j must be >= 1");
  *out = static_cast<arw_instruction>(tape->tape.at(site, j));
  return ARW_OK;
}

void arw_tape_destroy(arw_tape* tape) { delete tape; }

arw_status arw_stabilize_ones(const arw_tape* tape, int64_t lo, int64_t hi, uint64_t fuel,
                              arw_report* out) {
  if (!tape || !out) return set_error(ARW_EINVAL, "tape and out must not be null");
  try {
    const arw::SegmentSpec region{lo, hi};
    region.validate();
    if (region.size() > (int64_t{1} << 32))
      return set_error(ARW_EINVAL, "segment too large to materialize");
    const arw::StabilizationReport rep = arw::stabilize(
        arw::Configuration::ones(region), region, tape->tape, arw::Leftmost{}, fuel);
    fill_report(rep, out);
    return ARW_OK;
  } catch (...) {
    return from_exception();
  }
}

arw_status arw_stabilize_point_source(const arw_tape* tape, int64_t k, uint64_t fuel,
                                      arw_report* out) {
  if (!tape || !out) return set_error(ARW_EINVAL, "tape and out must not be null");
  try {
    const arw::StabilizationReport rep = arw::stabilize_point_source(k, tape->tape, fuel);
    fill_report(rep, out);
    return ARW_OK;
  } catch (...) {
    return from_exception();
  }
}

arw_status arw_plan_create(arw_plan** out) {
  if (!out) return set_error(ARW_EINVAL, "out must not be null");
  *out = new (std::nothrow) arw_plan;
  return *out ? ARW_OK : set_error(ARW_ENOMEM, "allocation failed");
}

arw_status arw_plan_set(arw_plan* plan, const char* key, const char* value) {
  if (!plan || !key || !value) return set_error(ARW_EINVAL, "plan, key and value must not be null");
  try {
    plan->kv.emplace_back(key, value);
    return ARW_OK;
  } catch (...) {
    return from_exception();
  }
}

arw_status arw_plan_run(const arw_plan* plan, arw_result** out) {
  if (!plan || !out) return set_error(ARW_EINVAL, "plan and out must not be null");
  try {
    const arw::ExperimentPlan parsed = arw::plan_from_kv(plan->kv);
    auto* result = new arw_result{arw::run_experiment(parsed), {}, {}};
    *out = result;
    return result->doc.check_failed ? set_error(ARW_ECHECK, result->doc.check_summary) : ARW_OK;
  } catch (...) {
    return from_exception();
  }
}

void arw_plan_destroy(arw_plan* plan) { delete plan; }

arw_status arw_result_render(const arw_result* result, const char* format, const char** out_text) {
  if (!result || !format || !out_text)
    return set_error(ARW_EINVAL, "result, format and out_text must not be null");
  try {
    const std::string fmt(format);
    if (fmt == "csv")
      result->rendered = arw::render_csv(result->doc);
    else if (fmt == "json")
      result->rendered = arw::render_json(result->doc);
    else
      return set_error(ARW_EINVAL, "format: expected 'csv' or 'json', got '" + fmt + "'");
    *out_text = result->rendered.c_str();
    return ARW_OK;
  } catch (...) {
    return from_exception();
  }
}

arw_status arw_result_meta(const arw_result* result, const char** out_text) {
  if (!result || !out_text) return set_error(ARW_EINVAL, "result and out_text must not be null");
  try {
    result->meta = arw::render_meta(result->doc);
    *out_text = result->meta.c_str();
    return ARW_OK;
  } catch (...) {
    return from_exception();
  }
}

int arw_result_check_failed(const arw_result* result) {
  return result && result->doc.check_failed ? 1 : 0;
}

void arw_result_destroy(arw_result* result) { delete result; }

}  // extern "C"
