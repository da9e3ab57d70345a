#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "selfpref/audit.hpp"
#include "selfpref/error.hpp"
#include "selfpref/fixtures.hpp"
#include "selfpref/ingest.hpp"
#include "selfpref/metrics.hpp"
#include "selfpref/report.hpp"
#include "selfpref/simulator.hpp"
#include "selfpref/stats.hpp"
#include "selfpref/templates.hpp"
#include "selfpref/votes.hpp"

namespace py = pybind11;
using namespace selfpref;

namespace {

py::dict result_dict(const QualityTestResult& r) {
  py::dict d;
  d["n"] = r.n;
  d["mean_delta"] = r.mean_delta;
  d["se"] = r.se;
  d["t"] = r.t;
  d["p"] = r.p;
  d["degenerate"] = r.degenerate;
  d["p_censored"] = r.p_censored;
  d["ilsp_orig"] = r.ilsp_orig;
  d["ilsp_upd"] = r.ilsp_upd;
  d["rel_delta"] = r.rel_delta;
  return d;
}

py::dict published_dict(const PublishedRow& r) {
  py::dict d;
  d["dataset"] = r.dataset;
  d["model"] = r.model;
  d["ilsp_orig"] = r.ilsp_orig;
  d["ilsp_upd"] = r.ilsp_upd;
  d["n"] = r.n;
  d["rel_delta"] = r.rel_delta_printed;
  d["p"] = r.p;
  d["p_censored"] = r.p_censored;
  d["bold"] = r.bold;
  return d;
}

py::list published_list(const std::vector<PublishedRow>& rows) {
  py::list out;
  for (const auto& r : rows) out.append(published_dict(r));
  return out;
}

SimConfig sim_config(std::size_t n_examples, double beta, double judge_acc, std::size_t n_proxies, double noise_sd,
                     double base_quality, bool shared_noise, bool independent_proxy_outcomes,
                     std::vector<double> proxy_acc, std::uint64_t seed) {
  SimConfig c;
  c.n_examples = n_examples;
  c.beta = beta;
  c.judge_acc = judge_acc;
  c.n_proxies = n_proxies;
  c.noise_sd = noise_sd;
  c.base_quality = base_quality;
  c.shared_noise = shared_noise;
  c.independent_proxy_outcomes = independent_proxy_outcomes;
  c.proxy_acc = std::move(proxy_acc);
  c.seed = seed;
  return c;
}

#define SELFPREF_SIM_ARGS                                                                                    \
  py::arg("n_examples") = 1000, py::arg("beta") = 0.0, py::arg("judge_acc") = 0.5, py::arg("n_proxies") = 3, \
  py::arg("noise_sd") = 1.0, py::arg("base_quality") = 1.0, py::arg("shared_noise") = false,                 \
  py::arg("independent_proxy_outcomes") = false, py::arg("proxy_acc") = std::vector<double>{}, py::arg("seed") = 0

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Self-preference auditing for LLM judges";

  static py::exception<Error> error(m, "SelfprefError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error;
      py::object instance = exc(e.what());
      instance.attr("code") = to_string(e.code());
      PyErr_SetObject(error.ptr(), instance.ptr());
    }
  });

  py::class_<ModelId>(m, "ModelId")
      .def_readonly("id", &ModelId::id)
      .def_readonly("family", &ModelId::family)
      .def("__repr__", [](const ModelId& id) { return "ModelId(" + id.id + ", " + id.family + ")"; });

  py::class_<EvalRecord>(m, "EvalRecord")
      .def_property_readonly("dataset", [](const EvalRecord& r) { return r.query.dataset; })
      .def_property_readonly("example_id", [](const EvalRecord& r) { return r.query.example_id; })
      .def_readonly("judge", &EvalRecord::judge)
      .def_readonly("reference", &EvalRecord::reference)
      .def_readonly("subject", &EvalRecord::subject)
      .def_readonly("p_subject_first", &EvalRecord::p_subject_first)
      .def_readonly("p_subject_second", &EvalRecord::p_subject_second)
      .def_readonly("s", &EvalRecord::s)
      .def_readonly("outcome", &EvalRecord::outcome)
      .def("is_self", &EvalRecord::is_self);

  py::class_<RecordSet>(m, "RecordSet")
      .def("__len__", &RecordSet::size)
      .def_property_readonly("records",
                             [](const RecordSet& rs) { return std::vector<EvalRecord>(rs.begin(), rs.end()); })
      .def("to_jsonl", [](const RecordSet& rs) { return serialize_records(rs); });

  m.def(
      "ingest_text",
      [](const std::string& text, const std::string& source, double max_reject_fraction) {
        IngestOptions opts;
        opts.max_reject_fraction = max_reject_fraction;
        auto result = ingest_text(text, source, opts);
        py::list rejections;
        for (const auto& r : result.rejections) {
          py::dict d;
          d["path"] = r.path;
          d["line"] = r.line;
          d["code"] = to_string(r.code);
          d["reason"] = r.reason;
          rejections.append(d);
        }
        return py::make_tuple(std::move(result.records), rejections);
      },
      py::arg("text"), py::arg("source") = "<memory>", py::arg("max_reject_fraction") = 0.0,
      "Parses line-delimited records; returns (RecordSet, rejections).");

  m.def(
      "ingest_files",
      [](const std::vector<std::filesystem::path>& paths, double max_reject_fraction) {
        IngestOptions opts;
        opts.max_reject_fraction = max_reject_fraction;
        return ingest(paths, opts).records;
      },
      py::arg("paths"), py::arg("max_reject_fraction") = 0.0);

  m.def(
      "simulate",
      [](std::size_t n, double beta, double judge_acc, std::size_t k, double sd, double q, bool shared, bool indep,
         std::vector<double> proxy_acc, std::uint64_t seed) {
        return generate(sim_config(n, beta, judge_acc, k, sd, q, shared, indep, std::move(proxy_acc), seed));
      },
      SELFPREF_SIM_ARGS);

  m.def(
      "analytic_target",
      [](std::size_t n, double beta, double judge_acc, std::size_t k, double sd, double q, bool shared, bool indep,
         std::vector<double> proxy_acc, std::uint64_t seed) {
        return analytic_target(sim_config(n, beta, judge_acc, k, sd, q, shared, indep, std::move(proxy_acc), seed));
      },
      SELFPREF_SIM_ARGS);

  m.def(
      "recovery",
      [](std::size_t trials, double alpha, std::size_t n, double beta, double judge_acc, std::size_t k, double sd,
         double q, bool shared, bool indep, std::vector<double> proxy_acc, std::uint64_t seed) {
        RecoverySummary s;
        {
          py::gil_scoped_release release;
          s = recovery_experiment(sim_config(n, beta, judge_acc, k, sd, q, shared, indep, std::move(proxy_acc), seed),
                                  trials, alpha);
        }
        py::dict d;
        d["trials"] = s.trials;
        d["target"] = s.target;
        d["estimates"] = s.estimates;
        d["p_values"] = s.p_values;
        d["rejection_rate"] = s.rejection_rate();
        d["within_3se_fraction"] = s.within_3se_fraction();
        d["n_degenerate"] = s.n_degenerate;
        return d;
      },
      py::arg("trials"), py::arg("alpha") = 0.05, SELFPREF_SIM_ARGS);

  m.def(
      "paired_test", [](const std::vector<double>& deltas) { return result_dict(paired_test(deltas)); },
      py::arg("deltas"), "One-sided paired t-test of H0: mean delta <= 0.");
  m.def("student_t_cdf", &student_t_cdf, py::arg("t"), py::arg("df"));
  m.def("relative_delta", &relative_delta, py::arg("ilsp_orig"), py::arg("ilsp_upd"));
  m.def("binary_entropy", &binary_entropy, py::arg("p"));

  m.def(
      "decompose",
      [](const RecordSet& rs) {
        std::vector<EvalRecord> self;
        for (const auto& r : rs)
          if (r.is_self()) self.push_back(r);
        const auto d = decompose(self);
        py::dict out;
        out["sp"] = d.sp;
        out["acc"] = d.acc;
        out["bias"] = d.bias;
        out["ilsp"] = d.ilsp;
        out["lsp"] = d.lsp;
        out["n_loss"] = d.n_loss;
        out["n_win"] = d.n_win;
        return out;
      },
      py::arg("records"), "Decomposition of the self-records of a single group.");

  py::class_<AuditReport>(m, "AuditReport")
      .def_readonly("alpha", &AuditReport::alpha)
      .def_readonly("n_significant", &AuditReport::n_significant)
      .def_readonly("significance_fraction", &AuditReport::significance_fraction)
      .def_property_readonly("rows",
                             [](const AuditReport& r) {
                               py::list out;
                               for (const auto& row : r.rows) {
                                 auto d = result_dict(row.result);
                                 d["dataset"] = row.dataset;
                                 d["judge"] = row.judge;
                                 out.append(d);
                               }
                               return out;
                             })
      .def(
          "render",
          [](const AuditReport& r, const std::string& format) { return render(r, parse_report_format(format)); },
          py::arg("format") = "table");

  m.def(
      "audit",
      [](const RecordSet& rs, double alpha, const std::string& cell, bool exclude_same_family, bool diagnostics) {
        AuditOptions opts;
        opts.alpha = alpha;
        opts.cell = cell == "all" ? OutcomeCell::kAll : cell == "1" ? OutcomeCell::kWin : OutcomeCell::kLoss;
        opts.matching.exclude_same_family = exclude_same_family;
        opts.diagnostics = diagnostics;
        AuditOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = audit(rs, opts);
        }
        return outcome.report;
      },
      py::arg("records"), py::arg("alpha") = 0.05, py::arg("cell") = "0", py::arg("exclude_same_family") = false,
      py::arg("diagnostics") = true);

  m.def("parse_structured_report", [](const std::string& text) { return parse_structured(text); }, py::arg("text"));

  m.def("ilsp_summary_fixture", [] { return published_list(ilsp_summary_fixture()); });
  m.def("cot_summary_fixture", [] { return published_list(cot_summary_fixture()); });
  m.def("entropy_gap_fixture", [] {
    py::list out;
    for (const auto& r : entropy_gap_fixture()) {
      py::dict d;
      d["dataset"] = r.dataset;
      d["n"] = r.n;
      d["positive"] = r.positive;
      d["negative"] = r.negative;
      d["pct_positive"] = r.pct_positive;
      d["mean_gap"] = r.mean_gap;
      out.append(d);
    }
    return out;
  });

  m.def(
      "parse_cot_verdict",
      [](const std::string& text, const std::string& first, const std::string& second,
         std::optional<std::string> tie) -> py::tuple {
        const auto v = parse_cot_verdict(text, VoteAlphabet{first, second, std::move(tie)});
        return py::make_tuple(v.label, v.failure ? py::object(py::str(to_string(*v.failure))) : py::object(py::none()));
      },
      py::arg("text"), py::arg("first") = "A", py::arg("second") = "B", py::arg("tie") = std::optional<std::string>{},
      "Returns (label, failure); exactly one is None.");

  m.def("template_names", &builtin_template_names);
}
