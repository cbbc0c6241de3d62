#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "agcml/cli.hpp"
#include "agcml/pipeline.hpp"

namespace py = pybind11;
using namespace agcml;
using nlohmann::json;

namespace {

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg = config_from_json(text.empty() ? json::object() : json::parse(text));
    cfg.validate();
    return cfg;
}

py::object optional_index(const std::optional<GainIndex>& g) {
    return g ? py::object(py::int_(*g)) : py::object(py::none());
}

py::dict labeled_dict(const LabeledConfig& lc) {
    py::dict d;
    d["wanted_dbm"] = lc.config.wanted_dbm;
    d["blocker_dbm"] = lc.config.blocker_dbm ? py::object(py::float_(*lc.config.blocker_dbm)) : py::object(py::none());
    d["offset_mhz"] = lc.config.offset_mhz;
    d["seed"] = lc.config.seed;
    d["agc_before"] = lc.agc_before;
    d["agc_after"] = lc.agc_after;
    d["status_before"] = to_string(lc.status_before);
    d["status_after"] = to_string(lc.status_after);
    d["status_forced"] = to_string(lc.status_forced);
    d["agc_optim"] = optional_index(lc.agc_optim);
    d["excluded"] = lc.excluded;
    return d;
}

}  // namespace

PYBIND11_MODULE(_agcml, m) {
    m.doc() = "ML-assisted AGC simulation core";
    m.attr("TOOL_VERSION") = kToolVersion;

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

    m.def("status_of", [](bool aa, bool crc) { return to_string(status_of(aa, crc)); }, py::arg("aa_found"),
          py::arg("crc_ok"));
    m.def("lqi_from_snr", &lqi_from_snr, py::arg("snr_db"));
    m.def("combine_dbm", [](const std::vector<PowerDbm>& levels) { return combine_dbm(levels); }, py::arg("levels"));

    m.def("default_config", [] { return to_json(config_from_json(json::object())).dump(); });
    m.def("config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("config"));

    m.def(
        "label",
        [](double wanted, PowerDbm blocker, double offset, std::uint64_t seed, const std::string& config) {
            const ExperimentConfig cfg = parse_config(config);
            SweepPoint p;
            p.wanted_dbm = wanted;
            p.blocker_dbm = blocker;
            p.offset_mhz = offset;
            p.seed = seed;
            return labeled_dict(label_config(p, cfg.env));
        },
        py::arg("wanted_dbm"), py::arg("blocker_dbm"), py::arg("offset_mhz"), py::arg("seed") = 0,
        py::arg("config") = "");

    m.def(
        "sweep",
        [](const std::string& config) {
            py::list out;
            for (const auto& lc : run_sweep_stage(parse_config(config))) out.append(labeled_dict(lc));
            return out;
        },
        py::arg("config") = "");

    m.def(
        "flip",
        [](const std::string& config) {
            const ExperimentConfig cfg = parse_config(config);
            const auto rep = flip_experiment(run_sweep_stage(cfg), cfg.env);
            py::dict d;
            d["considered"] = rep.considered;
            d["qualifying"] = rep.qualifying;
            d["flipped"] = rep.flipped;
            d["fraction"] = rep.fraction ? py::object(py::float_(*rep.fraction)) : py::object(py::none());
            d["hardware_reference"] = FlipReport::kHardwareReference;
            return d;
        },
        py::arg("config") = "");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
