// fpcavity — command-line front end for the cavity toolkit.
//
// Subcommands: modes, budget, ringdown-sim, ringdown-fit, thermal-fit.
// Exit codes are part of the contract: 2 parse error, 3 unstable geometry,
// 4 temperature out of range, 5 invalid design, 6 fit failure (no
// convergence / not identifiable / insufficient data), 7 degenerate
// thermal regime.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpcavity/config.hpp"
#include "fpcavity/csv.hpp"
#include "fpcavity/loss_budget.hpp"
#include "fpcavity/reports.hpp"
#include "fpcavity/resonator_modes.hpp"
#include "fpcavity/ringdown.hpp"
#include "fpcavity/version.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitParse = 2;
constexpr int kExitUnstable = 3;
constexpr int kExitRange = 4;
constexpr int kExitDesign = 5;
constexpr int kExitFit = 6;
constexpr int kExitDegenerate = 7;

struct GlobalFlags {
    bool json = false;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::string command_echo;
};

void emit_report(const GlobalFlags& flags, const std::string& text,
                 const nlohmann::json& json_report) {
    const std::string dumped = json_report.dump(2) + "\n";
    if (flags.json) {
        std::cout << dumped;
    } else {
        std::cout << text;
    }
    if (!flags.out_path.empty()) fpcavity::write_file(flags.out_path, dumped);
}

std::string join_args(int argc, char** argv) {
    std::string echo;
    for (int i = 0; i < argc; ++i) {
        if (i) echo += ' ';
        echo += argv[i];
    }
    return echo;
}

// ---------------------------------------------------------------------------
// modes
// ---------------------------------------------------------------------------

struct ModesArgs {
    std::string geometry_path;
    double frequency_hz = 0.0;
    bool has_frequency = false;
    std::vector<int> qmn{9, 0, 0};
    std::string profile_axis;
    int profile_points = 201;
};

int run_modes(const GlobalFlags& flags, const ModesArgs& args) {
    using namespace fpcavity;
    const CavityGeometry geom =
        geometry_from_json(read_file(args.geometry_path), args.geometry_path);

    ModeIndices idx{args.qmn[0], args.qmn[1], args.qmn[2]};
    ModeProperties mode;
    if (args.has_frequency) {
        if (!(args.frequency_hz > 0.0)) {
            throw ParseError("--freq must be > 0");
        }
        mode = mode_geometry(geom, kSpeedOfLight / args.frequency_hz);
    } else {
        mode = mode_properties(geom, idx);
    }
    const ModeProperties mean_mode =
        mode_geometry(mean_radius_geometry(geom), kSpeedOfLight / mode.frequency_hz);

    if (!args.profile_axis.empty()) {
        // Intensity samples along one axis through the cavity center.
        double half_range;
        if (args.profile_axis == "x") {
            half_range = 2.0 * mode.waist_x_m;
        } else if (args.profile_axis == "y") {
            half_range = 2.0 * mode.waist_y_m;
        } else {
            half_range = geom.length_m / 2.0;
        }
        std::string csv = "position_m,relative_intensity\n";
        for (int i = 0; i < args.profile_points; ++i) {
            const double s = args.profile_points == 1
                                 ? 0.0
                                 : -half_range + 2.0 * half_range * i /
                                                     (args.profile_points - 1);
            const double x = args.profile_axis == "x" ? s : 0.0;
            const double y = args.profile_axis == "y" ? s : 0.0;
            const double z = args.profile_axis == "z" ? s : 0.0;
            csv += format_double(s);
            csv += ',';
            csv += format_double(intensity_profile(mode, x, y, z));
            csv += '\n';
        }
        if (flags.out_path.empty()) {
            std::cout << csv;
        } else {
            write_file(flags.out_path, csv);
        }
        return 0;
    }

    const auto [gx, gy] = stability_g(geom);
    nlohmann::json j{
        {"command", flags.command_echo},
        {"geometry", geometry_to_json(geom)},
        {"stability_g", {{"x", gx}, {"y", gy}}},
        {"indices", {{"q", idx.q}, {"m", idx.m}, {"n", idx.n}}},
        {"frequency_hz", mode.frequency_hz},
        {"fsr_hz", mode.fsr_hz},
        {"polarization_splitting_hz", mode.polarization_splitting_hz},
        {"waist_x_m", mode.waist_x_m},
        {"waist_y_m", mode.waist_y_m},
        {"waist_mean_m", mean_mode.waist_x_m},
        {"rayleigh_x_m", mode.rayleigh_x_m},
        {"rayleigh_y_m", mode.rayleigh_y_m},
        {"mirror_spot_x_m", mode.mirror_spot_x_m},
        {"mirror_spot_y_m", mode.mirror_spot_y_m},
        {"mirror_spot_mean_m", mean_mode.mirror_spot_x_m},
        {"gouy_x_rad", mode.gouy_x_rad},
        {"gouy_y_rad", mode.gouy_y_rad},
        {"version", kVersion}};
    if (!args.has_frequency) {
        j["frequency_is_resonance"] = true;
    }

    std::string text;
    text += "cavity modes (fpcavity " + std::string(kVersion) + ")\n";
    text += "geometry: L=" + format_sig(geom.length_m) +
            " m, Rx=" + format_sig(geom.radius_x_m) +
            " m, Ry=" + format_sig(geom.radius_y_m) + " m\n";
    if (args.has_frequency) {
        text += "frequency (given): " + format_sig(mode.frequency_hz) + " Hz\n";
    } else {
        text += "TEM(" + std::to_string(idx.q) + "," + std::to_string(idx.m) + "," +
                std::to_string(idx.n) +
                ") frequency: " + format_sig(mode.frequency_hz) + " Hz\n";
    }
    text += "free spectral range: " + format_sig(mode.fsr_hz) + " Hz\n";
    text += "polarization splitting: " + format_sig(mode.polarization_splitting_hz) +
            " Hz\n";
    text += "stability g: x=" + format_sig(gx) + "  y=" + format_sig(gy) + "\n";
    text += "waist w0: x=" + format_sig(mode.waist_x_m) +
            " m  y=" + format_sig(mode.waist_y_m) +
            " m  mean=" + format_sig(mean_mode.waist_x_m) + " m\n";
    text += "mirror spot w: x=" + format_sig(mode.mirror_spot_x_m) +
            " m  y=" + format_sig(mode.mirror_spot_y_m) +
            " m  mean=" + format_sig(mean_mode.mirror_spot_x_m) + " m\n";
    text += "rayleigh range: x=" + format_sig(mode.rayleigh_x_m) +
            " m  y=" + format_sig(mode.rayleigh_y_m) + " m\n";
    text += "gouy phase: x=" + format_sig(mode.gouy_x_rad) +
            " rad  y=" + format_sig(mode.gouy_y_rad) + " rad\n";
    emit_report(flags, text, j);
    return 0;
}

// ---------------------------------------------------------------------------
// budget
// ---------------------------------------------------------------------------

struct BudgetArgs {
    std::string geometry_path;
    double temperature_k = 0.8;
    std::vector<double> bcs{fpcavity::kNiobiumDefaults.a_coeff_ohm_k,
                            fpcavity::kNiobiumDefaults.gap_over_kb_k};
    double residual_ohm = 75e-9;
    double geometry_factor_ohm = 2800.0;
    std::vector<int> qmn{9, 0, 0};
    double frequency_hz = 0.0;
    bool has_frequency = false;
    double spot_m = 0.0;
    bool has_spot = false;
};

int run_budget(const GlobalFlags& flags, const BudgetArgs& args) {
    using namespace fpcavity;
    const CavityGeometry geom =
        geometry_from_json(read_file(args.geometry_path), args.geometry_path);

    const double frequency =
        args.has_frequency
            ? args.frequency_hz
            : resonance_frequency(geom, {args.qmn[0], args.qmn[1], args.qmn[2]});
    double spot = args.spot_m;
    if (!args.has_spot) {
        spot = mode_geometry(mean_radius_geometry(geom), kSpeedOfLight / frequency)
                   .mirror_spot_x_m;
    }
    const BcsParams bcs{args.bcs[0], args.bcs[1]};
    const BudgetReport report =
        make_budget_report(geom, frequency, args.qmn[0], args.temperature_k, bcs,
                           args.residual_ohm, args.geometry_factor_ohm, spot);
    nlohmann::json j = to_json(report);
    j["command"] = flags.command_echo;
    emit_report(flags, to_text(report), j);
    return 0;
}

// ---------------------------------------------------------------------------
// ringdown-sim
// ---------------------------------------------------------------------------

struct SimArgs {
    std::string design_path;
};

int run_ringdown_sim(const GlobalFlags& flags, const SimArgs& args) {
    using namespace fpcavity;
    SimulationDesign design =
        design_from_json(read_file(args.design_path), args.design_path);
    if (flags.seed) design.seed = *flags.seed;

    const RingdownDataset data = simulate(design);
    const std::string csv = ringdown_to_csv(data);
    const std::string out_path =
        flags.out_path.empty() ? std::string("ringdown.csv") : flags.out_path;
    write_file(out_path, csv);
    const std::string sidecar_path = out_path + ".design.json";
    write_file(sidecar_path, design_to_json(design).dump(2) + "\n");

    std::size_t n_rows = 0;
    for (const RingdownCurve& curve : data.curves) n_rows += curve.points.size();
    std::cout << "wrote " << n_rows << " points (" << data.curves.size()
              << " curves) to " << out_path << " (fnv1a64 " << fnv1a64_hex(csv)
              << ")\ndesign echo: " << sidecar_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ringdown-fit
// ---------------------------------------------------------------------------

struct RingdownFitArgs {
    std::string dataset_path;
    bool shift_only = false;
    std::string emit_curves_path;
};

int run_ringdown_fit(const GlobalFlags& flags, const RingdownFitArgs& args) {
    using namespace fpcavity;
    const std::string raw = read_file(args.dataset_path);
    const RingdownDataset data = ringdown_from_csv(raw, args.dataset_path);

    if (args.shift_only) {
        const ShiftEstimate estimate = shift_estimate(data);
        FitReport report;
        report.command = flags.command_echo;
        report.input_digests.push_back({args.dataset_path, fnv1a64_hex(raw)});
        report.parameters.push_back(
            {"tc_s", estimate.tc_s, estimate.std_error_s, "s"});
        report.converged = true;
        report.dof = estimate.pairs.size();
        report.seed = flags.seed;
        std::string text = to_text(report);
        for (const PairShift& pair : estimate.pairs) {
            text += "pair " + std::to_string(pair.low_index) + "-" +
                    std::to_string(pair.high_index) + ": shift " +
                    format_sig(pair.shift_s) + " s over " +
                    format_sig(pair.delta_db) + " dB -> tc " +
                    format_sig(pair.tc_s) + " s\n";
        }
        nlohmann::json j = to_json(report);
        nlohmann::json pairs = nlohmann::json::array();
        for (const PairShift& pair : estimate.pairs) {
            pairs.push_back({{"low_index", pair.low_index},
                             {"high_index", pair.high_index},
                             {"delta_db", pair.delta_db},
                             {"shift_s", pair.shift_s},
                             {"tc_s", pair.tc_s},
                             {"sigma_s", pair.sigma_s}});
        }
        j["pairs"] = pairs;
        emit_report(flags, text, j);
        return 0;
    }

    const FitResult fit = fit_ringdown(data);
    FitReport report =
        make_fit_report(fit, {"s", "dimensionless", "probability", "probability"});
    report.command = flags.command_echo;
    report.input_digests.push_back({args.dataset_path, fnv1a64_hex(raw)});
    report.seed = flags.seed;
    emit_report(flags, to_text(report), to_json(report));

    if (!args.emit_curves_path.empty() && fit.converged) {
        const ProbeModel model{fit.parameters[2], fit.parameters[3],
                               fit.parameters[1]};
        double t_max = 0.0;
        for (const RingdownCurve& curve : data.curves) {
            for (const RingdownPoint& pt : curve.points) {
                t_max = std::max(t_max, pt.time_s);
            }
        }
        std::string csv = "time_s,attenuation_db,probability\n";
        for (const RingdownCurve& curve : data.curves) {
            for (int i = 0; i < 200; ++i) {
                const double t = t_max * i / 199.0;
                csv += format_double(t);
                csv += ',';
                csv += format_double(curve.attenuation_db);
                csv += ',';
                csv += format_double(curve_probability(model, fit.parameters[0],
                                                       curve.attenuation_db, t));
                csv += '\n';
            }
        }
        write_file(args.emit_curves_path, csv);
    }
    if (!fit.converged) {
        std::cerr << "fit did not converge; report written with diagnostics\n";
        return kExitFit;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// thermal-fit
// ---------------------------------------------------------------------------

struct ThermalFitArgs {
    std::string dataset_path;
    double geometry_factor_ohm = 2800.0;
    double frequency_hz = 51.099e9;
    fpcavity::ThermalInit init;
    std::string emit_curves_path;
};

int run_thermal_fit(const GlobalFlags& flags, const ThermalFitArgs& args) {
    using namespace fpcavity;
    const std::string raw = read_file(args.dataset_path);
    const ThermalDataset data = thermal_from_csv(raw, args.dataset_path);

    const FitResult fit = fit_thermal(data, args.geometry_factor_ohm,
                                      args.frequency_hz, args.init);
    FitReport report = make_fit_report(fit, {"ohm*K", "K", "ohm"});
    report.command = flags.command_echo;
    report.input_digests.push_back({args.dataset_path, fnv1a64_hex(raw)});
    report.seed = flags.seed;
    emit_report(flags, to_text(report), to_json(report));

    if (!args.emit_curves_path.empty() && fit.converged) {
        // Samples on a uniform reciprocal-temperature grid, the natural
        // abscissa for an activated loss plot.
        const BcsParams bcs{fit.parameters[0], fit.parameters[1]};
        const double inv_lo = 1.0 / data.points.back().temperature_k;
        const double inv_hi = 1.0 / data.points.front().temperature_k;
        std::string csv = "inv_temperature_per_k,temperature_k,tc_s\n";
        for (int i = 0; i < 200; ++i) {
            const double inv = inv_lo + (inv_hi - inv_lo) * i / 199.0;
            const double t = 1.0 / inv;
            csv += format_double(inv);
            csv += ',';
            csv += format_double(t);
            csv += ',';
            csv += format_double(tc_vs_temperature(bcs, fit.parameters[2],
                                                   args.geometry_factor_ohm,
                                                   args.frequency_hz, t));
            csv += '\n';
        }
        write_file(args.emit_curves_path, csv);
    }
    if (!fit.converged) {
        std::cerr << "fit did not converge; report written with diagnostics\n";
        return kExitFit;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superconducting Fabry-Perot cavity toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    flags.command_echo = join_args(argc, argv);
    app.add_flag("--json", flags.json, "print the JSON report to stdout");
    app.add_option("--out", flags.out_path,
                   "output path (JSON report, or the dataset for ringdown-sim)");
    std::uint64_t seed_value = 0;
    auto* seed_opt =
        app.add_option("--seed", seed_value, "override the generator seed");

    ModesArgs modes_args;
    auto* modes = app.add_subcommand("modes", "mode geometry and spectrum");
    modes->add_option("--geometry", modes_args.geometry_path, "geometry JSON file")
        ->required();
    auto* freq_opt = modes->add_option("--freq", modes_args.frequency_hz,
                                       "evaluate at this frequency (Hz)");
    modes->add_option("--qmn", modes_args.qmn, "mode indices q m n")
        ->expected(3)
        ->excludes(freq_opt);
    modes->add_option("--profile", modes_args.profile_axis,
                      "emit intensity samples along an axis (x, y or z)")
        ->check(CLI::IsMember({"x", "y", "z"}));
    modes->add_option("--profile-points", modes_args.profile_points,
                      "number of profile samples")
        ->check(CLI::PositiveNumber);

    BudgetArgs budget_args;
    auto* budget = app.add_subcommand("budget", "quality-factor loss budget");
    budget->add_option("--geometry", budget_args.geometry_path, "geometry JSON file")
        ->required();
    budget->add_option("--temp", budget_args.temperature_k, "mirror temperature (K)");
    budget->add_option("--bcs", budget_args.bcs,
                       "BCS parameters: A (ohm K) and Delta0/kB (K)")
        ->expected(2);
    budget->add_option("--residual", budget_args.residual_ohm,
                       "residual resistance (ohm)");
    budget->add_option("--geometry-factor", budget_args.geometry_factor_ohm,
                       "geometry factor G (ohm)");
    budget->add_option("--qmn", budget_args.qmn, "mode indices q m n")->expected(3);
    auto* budget_freq = budget->add_option("--freq", budget_args.frequency_hz,
                                           "override the mode frequency (Hz)");
    auto* budget_spot = budget->add_option(
        "--spot", budget_args.spot_m, "override the mirror spot size w (m)");

    SimArgs sim_args;
    auto* sim = app.add_subcommand("ringdown-sim", "simulate a ring-down dataset");
    sim->add_option("design", sim_args.design_path, "design JSON file")->required();

    RingdownFitArgs rfit_args;
    auto* rfit = app.add_subcommand("ringdown-fit", "estimate the damping time");
    rfit->add_option("dataset", rfit_args.dataset_path, "ring-down CSV file")
        ->required();
    auto* model_flag = rfit->add_flag("--model-fit", "full saturation-model fit "
                                                     "(default)");
    rfit->add_flag("--shift-only", rfit_args.shift_only,
                   "model-light time-shift estimator")
        ->excludes(model_flag);
    rfit->add_option("--emit-curves", rfit_args.emit_curves_path,
                     "write fitted-model samples to this CSV");

    ThermalFitArgs tfit_args;
    auto* tfit = app.add_subcommand("thermal-fit", "fit the thermal loss model");
    tfit->add_option("dataset", tfit_args.dataset_path, "thermal CSV file")
        ->required();
    tfit->add_option("--geometry-factor", tfit_args.geometry_factor_ohm,
                     "geometry factor G (ohm)");
    tfit->add_option("--freq", tfit_args.frequency_hz, "mode frequency (Hz)");
    tfit->add_option("--init-a", tfit_args.init.a_coeff_ohm_k,
                     "initial A coefficient (ohm K)");
    tfit->add_option("--init-gap", tfit_args.init.gap_over_kb_k,
                     "initial Delta0/kB (K)");
    tfit->add_option("--init-residual", tfit_args.init.r_residual_ohm,
                     "initial residual resistance (ohm)");
    tfit->add_option("--emit-curves", tfit_args.emit_curves_path,
                     "write model samples on a reciprocal-temperature grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }
    if (seed_opt->count() > 0) flags.seed = seed_value;
    modes_args.has_frequency = freq_opt->count() > 0;
    budget_args.has_frequency = budget_freq->count() > 0;
    budget_args.has_spot = budget_spot->count() > 0;
    if (!rfit_args.emit_curves_path.empty() && rfit_args.shift_only) {
        std::cerr << "--emit-curves requires the model fit\n";
        return kExitParse;
    }

    try {
        if (*modes) return run_modes(flags, modes_args);
        if (*budget) return run_budget(flags, budget_args);
        if (*sim) return run_ringdown_sim(flags, sim_args);
        if (*rfit) return run_ringdown_fit(flags, rfit_args);
        if (*tfit) return run_thermal_fit(flags, tfit_args);
    } catch (const fpcavity::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const fpcavity::UnstableGeometry& e) {
        std::cerr << "unstable geometry: " << e.what() << "\n";
        return kExitUnstable;
    } catch (const fpcavity::NonPositiveTemperature& e) {
        std::cerr << "temperature out of range: " << e.what() << "\n";
        return kExitRange;
    } catch (const fpcavity::TemperatureOutOfRange& e) {
        std::cerr << "temperature out of range: " << e.what() << "\n";
        return kExitRange;
    } catch (const fpcavity::InvalidDesign& e) {
        std::cerr << "invalid design: " << e.what() << "\n";
        return kExitDesign;
    } catch (const fpcavity::DegenerateRegime& e) {
        std::cerr << "degenerate regime: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const fpcavity::FitDidNotConverge& e) {
        std::cerr << "fit failure: " << e.what() << "\n";
        return kExitFit;
    } catch (const fpcavity::IdentifiabilityError& e) {
        std::cerr << "fit failure (IdentifiabilityError): " << e.what() << "\n";
        return kExitFit;
    } catch (const fpcavity::InsufficientData& e) {
        std::cerr << "fit failure (InsufficientData): " << e.what() << "\n";
        return kExitFit;
    } catch (const fpcavity::NonOverlappingSupport& e) {
        std::cerr << "fit failure (NonOverlappingSupport): " << e.what() << "\n";
        return kExitFit;
    } catch (const fpcavity::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return 0;
}
