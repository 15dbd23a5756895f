#include "bwadapt/config.hpp"
#include "bwadapt/engine.hpp"
#include "bwadapt/metrics.hpp"
#include "bwadapt/model.hpp"
#include "bwadapt/oracle.hpp"
#include "bwadapt/policy.hpp"
#include "bwadapt/sweep.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace bwadapt;

namespace
{
    void bind_model(py::module_ &m)
    {
        py::class_<TrafficClass>(m, "TrafficClass")
            .def(py::init<>())
            .def_readwrite("name", &TrafficClass::name)
            .def_readwrite("index", &TrafficClass::index)
            .def_readwrite("requested_kbps", &TrafficClass::requested_kbps)
            .def_readwrite("gamma", &TrafficClass::gamma)
            .def_readwrite("arrival_weight", &TrafficClass::arrival_weight)
            .def_readwrite("mean_duration_s", &TrafficClass::mean_duration_s)
            .def_readwrite("elastic", &TrafficClass::elastic)
            .def("__repr__", [](const TrafficClass &c) {
                return "<TrafficClass " + c.name + " " + std::to_string(c.requested_kbps) + " kbps>";
            });

        m.def("default_classes", &default_classes);
        m.def("geometric_gamma_row", &geometric_gamma_row, py::arg("gamma0"), py::arg("decay"),
              py::arg("num_classes"));

        py::class_<RequestPriority>(m, "RequestPriority")
            .def_static("handover", &RequestPriority::handover)
            .def_static("new_call", &RequestPriority::new_call, py::arg("class_index"))
            .def_property_readonly("value", &RequestPriority::value);

        py::class_<MatrixViolation>(m, "MatrixViolation")
            .def_readonly("class_index", &MatrixViolation::class_index)
            .def_readonly("priority", &MatrixViolation::priority)
            .def_readonly("reason", &MatrixViolation::reason);

        py::class_<PolicyMatrix>(m, "PolicyMatrix")
            .def(py::init<std::vector<TrafficClass>>(), py::arg("classes"))
            .def_property_readonly("num_classes", &PolicyMatrix::num_classes)
            .def_property_readonly("classes",
                                   [](const PolicyMatrix &pm) {
                                       return std::vector<TrafficClass>(pm.classes().begin(), pm.classes().end());
                                   })
            .def("gamma", &PolicyMatrix::gamma, py::arg("m"), py::arg("p"))
            .def("floor", py::overload_cast<std::size_t, std::size_t>(&PolicyMatrix::floor, py::const_), py::arg("m"),
                 py::arg("p"))
            .def("requested", &PolicyMatrix::requested, py::arg("m"));

        m.def("validate_matrix", &validate_matrix, py::arg("matrix"),
              "None when the matrix is valid, else the first offending (m, p).");

        py::enum_<CallOrigin>(m, "CallOrigin").value("New", CallOrigin::New).value("Handover", CallOrigin::Handover);

        py::class_<Call>(m, "Call")
            .def(py::init<>())
            .def_readwrite("id", &Call::id)
            .def_readwrite("class_index", &Call::class_index)
            .def_readwrite("allocation_kbps", &Call::allocation_kbps)
            .def_readwrite("elastic", &Call::elastic)
            .def_readwrite("remaining", &Call::remaining)
            .def_readwrite("settled_at", &Call::settled_at)
            .def_readwrite("origin", &Call::origin)
            .def_readwrite("root_id", &Call::root_id)
            .def_readwrite("admitted_at", &Call::admitted_at);

        m.def("degradation_of", &degradation_of, py::arg("call"), py::arg("matrix"));
        m.def("service_dynamics", &service_dynamics, py::arg("call"), py::arg("dt"));

        py::class_<CellState>(m, "CellState")
            .def(py::init<double, std::size_t>(), py::arg("capacity_kbps"), py::arg("num_classes"))
            .def_property_readonly("capacity", &CellState::capacity)
            .def_property_readonly("allocated", &CellState::allocated)
            .def_property_readonly("free", &CellState::free)
            .def_property_readonly("calls",
                                   [](const CellState &s) { return std::vector<Call>(s.calls().begin(), s.calls().end()); })
            .def("add", &CellState::add, py::arg("call"))
            .def("remove", &CellState::remove, py::arg("id"))
            .def("__len__", &CellState::size);
    }

    void bind_policy(py::module_ &m)
    {
        py::class_<Reallocation>(m, "Reallocation")
            .def_readonly("call_id", &Reallocation::call_id)
            .def_readonly("old_kbps", &Reallocation::old_kbps)
            .def_readonly("new_kbps", &Reallocation::new_kbps);

        py::class_<AdmissionDecision>(m, "AdmissionDecision")
            .def_property_readonly("admitted", &AdmissionDecision::admitted)
            .def_readonly("granted_kbps", &AdmissionDecision::granted_kbps)
            .def_readonly("degradations", &AdmissionDecision::degradations)
            .def_readonly("oversized", &AdmissionDecision::oversized);

        py::enum_<SchemeKind>(m, "SchemeKind")
            .value("ProposedPriorityMultilevel", SchemeKind::ProposedPriorityMultilevel)
            .value("AdaptiveNonPriority", SchemeKind::AdaptiveNonPriority)
            .value("NonAdaptiveNonPriority", SchemeKind::NonAdaptiveNonPriority);
        m.def("scheme_name", [](SchemeKind s) { return std::string(to_string(s)); });
        m.def("parse_scheme", [](const std::string &s) { return parse_scheme(s); });

        m.def("releasable_per_call", &releasable_per_call, py::arg("call"), py::arg("priority"), py::arg("matrix"));
        m.def("admit", &admit, py::arg("state"), py::arg("candidate"), py::arg("priority"), py::arg("matrix"));
        m.def("restore_on_departure", &restore_on_departure, py::arg("state"), py::arg("freed_kbps"),
              py::arg("matrix"));
        m.def("apply_scheme", &apply_scheme, py::arg("matrix"), py::arg("scheme"));
    }

    void bind_oracle(py::module_ &m)
    {
        auto o = m.def_submodule("oracle", "Analytical loss-system baselines");
        o.def("erlang_b", &oracle::erlang_b, py::arg("servers"), py::arg("offered_erlangs"));
        py::class_<oracle::MultirateClass>(o, "MultirateClass")
            .def(py::init([](std::size_t channels, double erlangs, double holding) {
                     return oracle::MultirateClass{channels, erlangs, holding};
                 }),
                 py::arg("channels"), py::arg("offered_erlangs"), py::arg("mean_holding") = 1.0)
            .def_readwrite("channels", &oracle::MultirateClass::channels)
            .def_readwrite("offered_erlangs", &oracle::MultirateClass::offered_erlangs)
            .def_readwrite("mean_holding", &oracle::MultirateClass::mean_holding);
        py::class_<oracle::MultirateSystem>(o, "MultirateSystem")
            .def(py::init([](std::size_t capacity, std::vector<oracle::MultirateClass> classes) {
                     return oracle::MultirateSystem{capacity, std::move(classes)};
                 }),
                 py::arg("capacity"), py::arg("classes"))
            .def_readwrite("capacity", &oracle::MultirateSystem::capacity)
            .def_readwrite("classes", &oracle::MultirateSystem::classes);
        o.def("kaufman_roberts", &oracle::kaufman_roberts, py::arg("system"));
        o.def("kaufman_roberts_occupancy", &oracle::kaufman_roberts_occupancy, py::arg("system"));
        o.def("ctmc_blocking", &oracle::ctmc_blocking, py::arg("system"),
              py::arg("max_states") = oracle::kMaxCtmcStates);
        py::register_exception<oracle::StateSpaceTooLarge>(o, "StateSpaceTooLarge");
    }

    void bind_metrics(py::module_ &m)
    {
        py::class_<Estimate>(m, "Estimate")
            .def_readonly("value", &Estimate::value)
            .def_readonly("half_width", &Estimate::half_width)
            .def_readonly("samples", &Estimate::samples)
            .def_readonly("defined", &Estimate::defined);
        py::class_<ClassCounters>(m, "ClassCounters")
            .def_readonly("new_arrivals", &ClassCounters::new_arrivals)
            .def_readonly("new_blocks", &ClassCounters::new_blocks)
            .def_readonly("handover_attempts", &ClassCounters::handover_attempts)
            .def_readonly("handover_drops", &ClassCounters::handover_drops)
            .def_readonly("completions", &ClassCounters::completions)
            .def_readonly("admitted_roots", &ClassCounters::admitted_roots)
            .def_readonly("forced_terminations", &ClassCounters::forced_terminations);
        py::class_<ClassSummary>(m, "ClassSummary")
            .def_readonly("totals", &ClassSummary::totals)
            .def_readonly("new_block", &ClassSummary::new_block)
            .def_readonly("handover_drop", &ClassSummary::handover_drop)
            .def_readonly("forced_termination", &ClassSummary::forced_termination)
            .def_readonly("mean_allocation_kbps", &ClassSummary::mean_allocation_kbps);
        py::class_<RunMetrics>(m, "RunMetrics")
            .def_readonly("capacity_kbps", &RunMetrics::capacity_kbps)
            .def_readonly("classes", &RunMetrics::classes)
            .def_readonly("aggregate", &RunMetrics::aggregate)
            .def_readonly("utilization", &RunMetrics::utilization)
            .def_readonly("events_processed", &RunMetrics::events_processed)
            .def_readonly("stale_events", &RunMetrics::stale_events)
            .def_readonly("invariant_checks", &RunMetrics::invariant_checks)
            .def_readonly("invariant_violations", &RunMetrics::invariant_violations)
            .def_readonly("trace_digest", &RunMetrics::trace_digest)
            .def_readonly("min_allocation_kbps", &RunMetrics::min_allocation_kbps)
            .def_readonly("warnings", &RunMetrics::warnings);
    }

    void bind_engine(py::module_ &m)
    {
        py::enum_<ServiceDistribution>(m, "ServiceDistribution")
            .value("Exponential", ServiceDistribution::Exponential)
            .value("Deterministic", ServiceDistribution::Deterministic);

        py::class_<ScenarioConfig>(m, "ScenarioConfig")
            .def(py::init<>())
            .def_readwrite("capacity_kbps", &ScenarioConfig::capacity_kbps)
            .def_readwrite("classes", &ScenarioConfig::classes)
            .def_readwrite("lambda_", &ScenarioConfig::lambda)
            .def_readwrite("mean_dwell_s", &ScenarioConfig::mean_dwell_s)
            .def_readwrite("scheme", &ScenarioConfig::scheme)
            .def_readwrite("duration_s", &ScenarioConfig::duration_s)
            .def_readwrite("warmup_s", &ScenarioConfig::warmup_s)
            .def_readwrite("seed", &ScenarioConfig::seed)
            .def_readwrite("batches", &ScenarioConfig::batches)
            .def_readwrite("service", &ScenarioConfig::service)
            .def_readwrite("check_invariants", &ScenarioConfig::check_invariants);

        m.def("validate_config", &validate_config, py::arg("config"));
        m.def("run", &run, py::arg("config"), py::call_guard<py::gil_scoped_release>());
        m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");
        m.def("load_config", &load_config, py::arg("path"));
        m.def("format_policy_table", &format_policy_table, py::arg("matrix"));

        py::class_<SweepSpec>(m, "SweepSpec")
            .def(py::init<>())
            .def_readwrite("base", &SweepSpec::base)
            .def_readwrite("lambda_grid", &SweepSpec::lambda_grid)
            .def_readwrite("schemes", &SweepSpec::schemes)
            .def_readwrite("replications", &SweepSpec::replications)
            .def_readwrite("workers", &SweepSpec::workers);
        py::class_<SweepPoint>(m, "SweepPoint")
            .def_readonly("scheme", &SweepPoint::scheme)
            .def_readonly("lambda_", &SweepPoint::lambda)
            .def_readonly("metrics", &SweepPoint::metrics);
        m.def("run_sweep", &run_sweep, py::arg("spec"), py::call_guard<py::gil_scoped_release>());
        m.def("sweep_csv", &sweep_csv, py::arg("points"), py::arg("matrix"));
        m.attr("CSV_HEADER") = std::string(kCsvHeader);

        py::class_<ValidationCheck>(m, "ValidationCheck")
            .def_readonly("scenario", &ValidationCheck::scenario)
            .def_readonly("traffic_class", &ValidationCheck::traffic_class)
            .def_readonly("simulated", &ValidationCheck::simulated)
            .def_readonly("half_width", &ValidationCheck::half_width)
            .def_readonly("oracle", &ValidationCheck::oracle)
            .def_readonly("relative_error", &ValidationCheck::relative_error)
            .def_readonly("arrivals", &ValidationCheck::arrivals)
            .def_readonly("passed", &ValidationCheck::pass);
        m.def(
            "validate_against_oracles",
            [](std::uint64_t min_arrivals, std::uint64_t seed, bool negative_control) {
                py::gil_scoped_release release;
                return validate_against_oracles(ValidationOptions{min_arrivals, seed, negative_control});
            },
            py::arg("min_arrivals") = 1'000'000, py::arg("seed") = 7, py::arg("negative_control") = false);
    }
}

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Priority-based multi-level bandwidth adaptation: policy, simulator and oracles.";
    m.attr("__version__") = "0.1.0";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    bind_model(m);
    bind_policy(m);
    bind_metrics(m);
    bind_engine(m);
    bind_oracle(m);
}
