#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "le3d/datagen/emulator.hpp"
#include "le3d/detector/detector.hpp"
#include "le3d/error.hpp"
#include "le3d/estimators/estimator.hpp"
#include "le3d/estimators/ks.hpp"
#include "le3d/scenario.hpp"
#include "le3d/transport/codec.hpp"

namespace py = pybind11;
using namespace le3d;

namespace {

std::map<std::string, bool> votes_by_name(const std::map<EstimatorKind, bool>& votes) {
  std::map<std::string, bool> out;
  for (const auto& [k, v] : votes) out.emplace(std::string(to_string(k)), v);
  return out;
}

std::vector<EstimatorConfig> configs_from_names(const std::vector<std::string>& names) {
  std::vector<EstimatorConfig> out;
  for (const auto& n : names) out.push_back(default_config(parse_estimator_kind(n)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_le3d, m) {
  m.doc() = "Lightweight ensemble drift detection core";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<InputError>(m, "InputError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ConflictError>(m, "ConflictError", error.ptr());
  py::register_exception<RoutingError>(m, "RoutingError", error.ptr());
  py::register_exception<NotFoundError>(m, "NotFoundError", error.ptr());
  static py::exception<DecodeError> decode_error(m, "DecodeError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DecodeError& e) {
      py::object exc = py::reinterpret_borrow<py::object>(decode_error.ptr())(e.what());
      exc.attr("field") = e.field();
      PyErr_SetObject(decode_error.ptr(), exc.ptr());
    }
  });

  py::class_<KsResult>(m, "KsResult")
      .def_readonly("statistic_d", &KsResult::statistic_d)
      .def_readonly("p_value", &KsResult::p_value)
      .def_readonly("n_recent", &KsResult::n_recent)
      .def_readonly("n_reference", &KsResult::n_reference)
      .def("__repr__", [](const KsResult& r) {
        return "KsResult(d=" + std::to_string(r.statistic_d) + ", p=" + std::to_string(r.p_value) + ")";
      });

  m.def("ks_two_sample", [](std::vector<double> a, std::vector<double> b) { return ks_two_sample(a, b); },
        py::arg("a"), py::arg("b"));
  m.def("ks_two_sample_gap",
        [](std::vector<double> a, std::vector<double> b) {
          KsGap g = ks_two_sample_gap(a, b);
          return py::make_tuple(g.numerator, g.denominator);
        },
        py::arg("a"), py::arg("b"), "Exact largest ECDF gap as (numerator, denominator).");
  m.def("ks_one_sample",
        [](std::vector<double> window, std::vector<double> reference) {
          EmpiricalCdf cdf(reference);
          return ks_one_sample(window, cdf);
        },
        py::arg("window"), py::arg("reference"));
  m.def("kolmogorov_p_value", &kolmogorov_p_value, py::arg("d"), py::arg("effective_n"));

  py::class_<AdwinConfig>(m, "AdwinConfig")
      .def(py::init<>())
      .def_readwrite("delta", &AdwinConfig::delta)
      .def_readwrite("max_buckets_per_class", &AdwinConfig::max_buckets_per_class);

  py::class_<Adwin>(m, "Adwin")
      .def(py::init([](double delta, int max_buckets) {
             AdwinConfig c;
             c.delta = delta;
             c.max_buckets_per_class = max_buckets;
             c.validate();
             return Adwin(c);
           }),
           py::arg("delta") = 0.002, py::arg("max_buckets_per_class") = 5)
      .def("update", &Adwin::update, py::arg("value"))
      .def_property_readonly("width", &Adwin::width)
      .def_property_readonly("mean", &Adwin::mean)
      .def_property_readonly("variance", &Adwin::variance)
      .def("bucket_sizes", &Adwin::bucket_sizes)
      .def_static("cut_threshold", &Adwin::cut_threshold, py::arg("n0"), py::arg("n1"), py::arg("total"),
                  py::arg("delta"));

  py::class_<PageHinkley>(m, "PageHinkley")
      .def(py::init([](int min_instances, double delta, double lambda, double alpha) {
             PageHinkleyConfig c{min_instances, delta, lambda, alpha};
             c.validate();
             return PageHinkley(c);
           }),
           py::arg("min_instances") = 30, py::arg("delta") = 0.005, py::arg("lambda_") = 50.0,
           py::arg("alpha") = 0.9999)
      .def("update", &PageHinkley::update, py::arg("value"))
      .def_property_readonly("samples_seen", &PageHinkley::samples_seen)
      .def_property_readonly("running_mean", &PageHinkley::running_mean);

  py::class_<Kswin>(m, "Kswin")
      .def(py::init([](int window_size, int stat_size, double alpha, std::uint64_t seed) {
             KswinConfig c{window_size, stat_size, alpha, seed};
             c.validate();
             return Kswin(c);
           }),
           py::arg("window_size") = 100, py::arg("stat_size") = 30, py::arg("alpha") = 0.005,
           py::arg("seed") = 42)
      .def("update", &Kswin::update, py::arg("value"))
      .def("__len__", &Kswin::size);

  py::class_<StaticThreshold>(m, "StaticThreshold")
      .def(py::init([](double low, double high) { return StaticThreshold({low, high}); }), py::arg("low"),
           py::arg("high"))
      .def("update", &StaticThreshold::update, py::arg("value"));

  m.def("quorum_count", &quorum_count, py::arg("n"), py::arg("quorum_fraction"));

  py::class_<Sample>(m, "Sample")
      .def(py::init([](std::string stream_id, std::string site, TimestampMs timestamp, double value,
                       std::uint64_t seq, std::string sensor_type, std::string unit) {
             Sample s;
             s.stream_id = std::move(stream_id);
             s.site = std::move(site);
             s.timestamp = timestamp;
             s.value = value;
             s.seq = seq;
             s.metadata.sensor_type = std::move(sensor_type);
             s.metadata.unit = std::move(unit);
             return s;
           }),
           py::arg("stream_id"), py::arg("site"), py::arg("timestamp"), py::arg("value"), py::arg("seq"),
           py::arg("sensor_type") = "generic", py::arg("unit") = "")
      .def_readwrite("stream_id", &Sample::stream_id)
      .def_readwrite("site", &Sample::site)
      .def_readwrite("timestamp", &Sample::timestamp)
      .def_readwrite("value", &Sample::value)
      .def_readwrite("seq", &Sample::seq)
      .def_property_readonly("sensor_type", [](const Sample& s) { return s.metadata.sensor_type; });

  py::class_<DriftDecision>(m, "DriftDecision")
      .def_readonly("stream_id", &DriftDecision::stream_id)
      .def_readonly("detector_id", &DriftDecision::detector_id)
      .def_readonly("site", &DriftDecision::site)
      .def_readonly("decided_at", &DriftDecision::decided_at)
      .def_readonly("drifting", &DriftDecision::drifting)
      .def_readonly("ks", &DriftDecision::ks)
      .def_readonly("seq_at_decision", &DriftDecision::seq_at_decision)
      .def_property_readonly("votes", [](const DriftDecision& d) { return votes_by_name(d.votes); });

  py::class_<Detector>(m, "Detector")
      .def(py::init([](std::string detector_id, std::string site) {
             return Detector(std::move(detector_id), std::move(site));
           }),
           py::arg("detector_id"), py::arg("site"))
      .def(
          "register_stream",
          [](Detector& d, std::string stream_id, std::vector<std::string> estimators, int vote_window,
             double quorum_fraction) {
            StreamBinding b;
            b.stream_id = std::move(stream_id);
            b.estimators = configs_from_names(estimators);
            b.vote_window = vote_window;
            b.quorum_fraction = quorum_fraction;
            d.register_stream(b);
          },
          py::arg("stream_id"), py::arg("estimators") = std::vector<std::string>{"adwin", "pht", "kswin"},
          py::arg("vote_window") = 10, py::arg("quorum_fraction") = 0.5)
      .def("ingest", &Detector::ingest_sample, py::arg("sample"))
      .def("status", &Detector::status, py::arg("stream_id"))
      .def("drifting", &Detector::drifting, py::arg("stream_id"))
      .def("samples_seen", &Detector::samples_seen, py::arg("stream_id"))
      .def("streams", &Detector::streams);

  py::class_<StreamProfile>(m, "StreamProfile")
      .def(py::init([](double mean, double stddev, std::int64_t period, std::string noise, std::uint64_t seed,
                       std::string sensor_type, std::string unit) {
             StreamProfile p{mean, stddev, period, parse_noise_model(noise), seed, std::move(sensor_type),
                             std::move(unit)};
             p.validate();
             return p;
           }),
           py::arg("mean"), py::arg("stddev"), py::arg("sample_period_ms") = 1000,
           py::arg("noise_model") = "gaussian", py::arg("seed") = 0, py::arg("sensor_type") = "generic",
           py::arg("unit") = "")
      .def_readonly("mean", &StreamProfile::mean)
      .def_readonly("stddev", &StreamProfile::stddev)
      .def_readonly("sample_period_ms", &StreamProfile::sample_period_ms)
      .def_readonly("seed", &StreamProfile::seed)
      .def_readonly("sensor_type", &StreamProfile::sensor_type)
      .def_property_readonly("noise_model",
                             [](const StreamProfile& p) { return std::string(to_string(p.noise_model)); });

  m.def(
      "fit_profile",
      [](std::vector<std::pair<TimestampMs, double>> rows) {
        std::vector<CsvRow> r;
        for (auto [t, v] : rows) r.push_back({t, v});
        return fit_profile(r);
      },
      py::arg("rows"), "Fits a profile to (timestamp_ms, value) pairs.");

  py::class_<CommandAck>(m, "CommandAck")
      .def_readonly("stream_id", &CommandAck::stream_id)
      .def_readonly("accepted", &CommandAck::accepted)
      .def_readonly("reason", &CommandAck::reason);

  py::class_<Emulator>(m, "Emulator")
      .def(py::init<StreamProfile, std::string, std::string>(), py::arg("profile"), py::arg("stream_id"),
           py::arg("site"))
      .def("next_sample", &Emulator::next_sample, py::arg("now"))
      .def(
          "apply_drift",
          [](Emulator& e, std::string target, std::string kind, double magnitude, std::int64_t duration_ms,
             TimestampMs issued_at, std::string scope) {
            DriftCommand c{std::move(target), parse_drift_kind(kind), magnitude, duration_ms, issued_at,
                           parse_drift_scope(scope)};
            return e.apply_drift(c, issued_at);
          },
          py::arg("target"), py::arg("kind"), py::arg("magnitude"), py::arg("duration_ms") = 0,
          py::arg("issued_at") = 0, py::arg("scope") = "single")
      .def("clear_drifts", &Emulator::clear_drifts)
      .def("active_offset", &Emulator::active_offset, py::arg("now"))
      .def_property_readonly("stream_id", &Emulator::stream_id);

  m.def(
      "encode_sample", [](const Sample& s) { return encode(make_envelope(s)); }, py::arg("sample"));
  m.def(
      "encode_decision", [](const DriftDecision& d) { return encode(make_envelope(d)); }, py::arg("decision"));
  m.def(
      "decode_kind", [](std::string bytes) { return std::string(to_string(decode(bytes).kind())); },
      py::arg("payload"));
  m.def(
      "decode_sample", [](std::string bytes) { return decode_as<Sample>(bytes); }, py::arg("payload"));
  m.def(
      "decode_decision", [](std::string bytes) { return decode_as<DriftDecision>(bytes); }, py::arg("payload"));
  m.def("payload_is_private", &payload_is_private, py::arg("payload"));

  m.def(
      "run_scenario",
      [](std::string script, std::uint64_t seed, int sites) {
        ScenarioOptions o;
        o.seed = seed;
        o.sites = sites;
        ScenarioScript s =
            script == "natural" ? ScenarioScript::NaturalAllOfType
            : script == "abnormal" ? ScenarioScript::AbnormalSingle
                                   : throw ConfigError("unknown script '" + script + "'");
        ScenarioResult r = run_scenario(s, o);
        std::vector<std::vector<std::string>> classes;
        for (const auto& h : r.class_history) {
          auto& row = classes.emplace_back();
          for (const auto& c : h) row.emplace_back(to_string(c.drift_class.kind));
        }
        py::dict out;
        out["correct"] = r.correct;
        out["detail"] = r.detail;
        out["injected_at"] = r.injected_at;
        out["classes"] = classes;
        out["payloads"] = r.privacy.payloads;
        out["privacy_violations"] = r.privacy.violations;
        return out;
      },
      py::arg("script"), py::arg("seed") = 1, py::arg("sites") = 3);
}
