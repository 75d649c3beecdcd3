// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "senseflow/engine.hpp"
#include "senseflow/error.hpp"

namespace py = pybind11;
using namespace senseflow;

namespace {

py::object to_py(const Value& v) {
  return std::visit(
      [](const auto& x) -> py::object {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Unknown>) return py::none();
        else if constexpr (std::is_same_v<T, GeoPoint>) return py::make_tuple(x.latitude, x.longitude);
        else return py::cast(x);
      },
      v.storage());
}

Value from_py(const py::handle& h) {
  if (h.is_none()) return Value::unknown();
  if (py::isinstance<py::bool_>(h)) return Value(h.cast<bool>());
  if (py::isinstance<py::int_>(h) || py::isinstance<py::float_>(h)) return Value(h.cast<double>());
  if (py::isinstance<py::str>(h)) return Value(h.cast<std::string>());
  if (py::isinstance<py::tuple>(h) && py::len(h) == 2) {
    auto t = h.cast<py::tuple>();
    return Value(GeoPoint{t[0].cast<double>(), t[1].cast<double>()});
  }
  throw py::type_error("unsupported value type");
}

py::dict record_to_py(const DataRecord& r) {
  py::dict values, quality, location;
  for (const auto& [k, v] : r.values) values[py::str(k)] = to_py(v);
  for (const auto& [k, q] : r.annotations.quality) quality[py::str(k)] = std::string(to_string(q));
  for (const auto& [k, l] : r.annotations.geographical_location) location[py::str(k)] = l;
  py::dict out;
  out["timestamp"] = r.timestamp_ms;
  out["values"] = values;
  out["quality"] = quality;
  out["geographicalLocation"] = location;
  return out;
}

py::list records_to_py(const std::vector<DataRecord>& records) {
  py::list out;
  for (const auto& r : records) out.append(record_to_py(r));
  return out;
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(); }

py::dict submit_to_py(const SubmitResult& r) {
  py::dict d;
  d["subscription_id"] = r.subscription_id;
  d["plan_id"] = r.plan_id;
  d["canonical_key"] = r.canonical_key;
  d["sources"] = r.sources;
  d["derived"] = r.derived;
  d["reused"] = r.reused;
  d["outputs"] = r.outputs;
  return d;
}

Availability availability_of(const std::string& s) {
  if (s == "online") return Availability::online;
  if (s == "offline") return Availability::offline;
  throw Error(ErrorCode::schema_violation, "availability must be 'online' or 'offline'");
}

}  // namespace

PYBIND11_MODULE(_senseflow, m) {
  m.doc() = "senseflow native core";

  static PyObject* exc = PyErr_NewException("senseflow._senseflow.SenseflowError", PyExc_RuntimeError, nullptr);
  m.add_object("SenseflowError", py::handle(exc));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(exc)(py::str(e.what()));
      err.attr("code") = std::string(to_string(e.code()));
      err.attr("detail") = e.detail();
      PyErr_SetObject(exc, err.ptr());
    }
  });

  py::class_<Engine>(m, "Engine")
      .def_static(
          "boot",
          [](const std::filesystem::path& config, const std::filesystem::path& out, bool keep_requests) {
            auto c = load_scenario_config(config);
            if (!keep_requests) c.requests.clear();
            EngineOptions options;
            options.output_directory = out;
            auto engine = Engine::boot(c, options);
            if (keep_requests) {
              for (const auto& r : c.requests) {
                std::ifstream in(r, std::ios::binary);
                std::ostringstream ss;
                ss << in.rdbuf();
                engine->submit(ss.str());
              }
            }
            return engine;
          },
          py::arg("config"), py::arg("output_directory") = ".", py::arg("submit_requests") = false)
      .def("submit", [](Engine& e, const std::string& doc) { return submit_to_py(e.submit(doc)); })
      .def("unsubscribe", &Engine::unsubscribe)
      .def("run_for", &Engine::run_for, py::call_guard<py::gil_scoped_release>())
      .def("now_ms", &Engine::now_ms)
      .def("set_availability",
           [](Engine& e, const std::string& sensor, const std::string& status) {
             e.set_availability(sensor, availability_of(status));
           })
      .def("inspect_json",
           [](const Engine& e, const std::string& kind) {
             auto k = parse_inspect_kind(kind);
             if (!k) throw py::value_error("unknown listing '" + kind + "'");
             return dump(e.inspect(*k));
           })
      .def("plan_dump_json", [](const Engine& e, const std::string& id) { return dump(e.plan_dump(id)); })
      .def("drain_stream", &Engine::drain_stream);

  m.def(
      "run_scenario",
      [](const std::filesystem::path& config, const std::filesystem::path& out, std::optional<std::int64_t> run_for_ms) {
        ScenarioOverrides o;
        o.run_for_ms = run_for_ms;
        ScenarioReport r;
        {
          auto c = load_scenario_config(config);
          py::gil_scoped_release release;
          r = run_scenario(c, out, o);
        }
        py::dict d;
        d["exit_status"] = r.exit_status;
        d["error"] = r.error;
        d["report_file"] = r.report_file;
        py::list subs;
        for (const auto& s : r.subscriptions) {
          py::dict j;
          j["subscription_id"] = s.subscription_id;
          j["status"] = s.status;
          j["deliveries"] = s.deliveries;
          j["file"] = s.file;
          j["records_checked"] = s.records_checked;
          j["consistency_mismatches"] = s.consistency_mismatches;
          subs.append(j);
        }
        d["subscriptions"] = subs;
        return d;
      },
      py::arg("config"), py::arg("output_directory"), py::arg("run_for_ms") = py::none());

  m.def(
      "evaluate_rules",
      [](const std::string& domain, const std::string& attribute, const py::dict& bindings) {
        KnowledgeBase kb;
        kb.load_domain(domain);
        std::map<std::string, Value, std::less<>> b;
        for (const auto& [k, v] : bindings) b[k.cast<std::string>()] = from_py(v);
        auto rules = kb.rules_for(attribute);
        return to_py(evaluate_rules(rules, b));
      },
      py::arg("domain_document"), py::arg("attribute"), py::arg("bindings"));

  m.def("validate_request", [](const std::string& doc) {
    auto v = validate_request(RequestDocument{doc});
    py::dict d;
    d["attributes"] = std::vector<std::string>(v.request.requested_attributes.begin(),
                                               v.request.requested_attributes.end());
    d["format"] = std::string(to_string(v.request.output_format));
    d["interval_ms"] = v.request.delivery_interval_ms;
    d["user_id"] = v.draft.user_id;
    return d;
  });

  m.def("parse_json_lines", [](const std::string& text) { return records_to_py(parse_json_lines(text)); });
  m.def("parse_csv", [](const std::string& text) { return records_to_py(parse_csv(text)); });
}
