#include "rcb/io.hpp"

#include <fstream>

#include "rcb/error.hpp"

namespace rcb {

namespace {

std::string at(const std::string& where, const std::string& key) { return where + "/" + key; }
std::string at(const std::string& where, std::size_t i) { return where + "/" + std::to_string(i); }

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw ConfigError((where.empty() ? std::string("/") : where) + ": " + msg);
}

const Json& require_array(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  return j;
}

std::vector<double> number_list(const Json& j, const std::string& where) {
  require_array(j, where);
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(json_number(j[i], at(where, i)));
  return out;
}

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void require_schema(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const Json& s = require_field(j, "schema", where);
  if (!s.is_number_integer() || s.get<long long>() != 1) fail(at(where, "schema"), "unsupported schema (expected 1)");
}

const Json& require_field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(at(where, key), "missing field");
  return *it;
}

double json_number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

std::size_t json_index(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(where, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

Instance instance_from_json(const Json& j, const std::string& where) {
  require_schema(j, where);
  Instance inst;
  inst.context_probs = number_list(require_field(j, "contexts", where), at(where, "contexts"));
  inst.n_actions = json_index(require_field(j, "actions", where), at(where, "actions"));
  inst.null_action = json_index(require_field(j, "null_action", where), at(where, "null_action"));
  inst.budgets = number_list(require_field(j, "budgets", where), at(where, "budgets"));
  inst.horizon = json_index(require_field(j, "horizon", where), at(where, "horizon"));

  const std::string owhere = at(where, "outcomes");
  const Json& rows = require_array(require_field(j, "outcomes", where), owhere);
  for (std::size_t x = 0; x < rows.size(); ++x) {
    const std::string xw = at(owhere, x);
    const Json& row = require_array(rows[x], xw);
    std::vector<std::vector<OutcomeTriple>> out_row;
    for (std::size_t a = 0; a < row.size(); ++a) {
      const std::string aw = at(xw, a);
      const Json& list = require_array(row[a], aw);
      std::vector<OutcomeTriple> triples;
      for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string kw = at(aw, k);
        OutcomeTriple o;
        o.reward = json_number(require_field(list[k], "r", kw), at(kw, "r"));
        o.consumption = number_list(require_field(list[k], "c", kw), at(kw, "c"));
        o.prob = json_number(require_field(list[k], "p", kw), at(kw, "p"));
        triples.push_back(std::move(o));
      }
      out_row.push_back(std::move(triples));
    }
    inst.outcomes.push_back(std::move(out_row));
  }
  return inst;
}

Json instance_to_json(const Instance& inst) {
  Json outcomes = Json::array();
  for (const auto& row : inst.outcomes) {
    Json jr = Json::array();
    for (const auto& list : row) {
      Json jl = Json::array();
      for (const auto& o : list) jl.push_back({{"r", o.reward}, {"c", o.consumption}, {"p", o.prob}});
      jr.push_back(std::move(jl));
    }
    outcomes.push_back(std::move(jr));
  }
  return {{"schema", 1},
          {"contexts", inst.context_probs},
          {"actions", inst.n_actions},
          {"null_action", inst.null_action},
          {"budgets", inst.budgets},
          {"horizon", inst.horizon},
          {"outcomes", std::move(outcomes)}};
}

PolicySet policies_from_json(const Json& j, const Instance& inst, const std::string& where) {
  require_array(j, where);
  std::vector<PolicyTable> tables;
  for (std::size_t p = 0; p < j.size(); ++p) {
    const std::string pw = at(where, p);
    require_array(j[p], pw);
    PolicyTable t;
    for (std::size_t x = 0; x < j[p].size(); ++x) t.push_back(json_index(j[p][x], at(pw, x)));
    tables.push_back(std::move(t));
  }
  try {
    return PolicySet::with_null(std::move(tables), inst.n_contexts(), inst.n_actions, inst.null_action);
  } catch (const UsageError& e) {
    fail(where, e.what());
  }
}

Json policies_to_json(const PolicySet& policies) {
  Json out = Json::array();
  for (const auto& t : policies.tables()) out.push_back(t);
  return out;
}

PricingModel pricing_from_json(const Json& j, const std::string& where) {
  require_schema(j, where);
  PricingModel model;
  model.context_probs = number_list(require_field(j, "contexts", where), at(where, "contexts"));
  model.lipschitz = json_number(require_field(j, "lipschitz", where), at(where, "lipschitz"));
  const std::string sw = at(where, "sales_rate");
  const Json& rates = require_array(require_field(j, "sales_rate", where), sw);
  for (std::size_t x = 0; x < rates.size(); ++x) {
    const std::string xw = at(sw, x);
    require_array(rates[x], xw);
    std::vector<std::pair<double, double>> bp;
    for (std::size_t k = 0; k < rates[x].size(); ++k) {
      const std::string kw = at(xw, k);
      const Json& pt = require_array(rates[x][k], kw);
      if (pt.size() != 2) fail(kw, "expected [price, sales_rate]");
      bp.emplace_back(json_number(pt[0], at(kw, 0)), json_number(pt[1], at(kw, 1)));
    }
    model.breakpoints.push_back(std::move(bp));
  }
  return model;
}

Json pricing_to_json(const PricingModel& model) {
  Json rates = Json::array();
  for (const auto& bp : model.breakpoints) {
    Json jr = Json::array();
    for (const auto& [p, s] : bp) jr.push_back({p, s});
    rates.push_back(std::move(jr));
  }
  return {{"schema", 1}, {"contexts", model.context_probs}, {"lipschitz", model.lipschitz}, {"sales_rate", rates}};
}

}  // namespace rcb
