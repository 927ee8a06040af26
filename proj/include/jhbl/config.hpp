#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jhbl/blur.hpp"
#include "jhbl/fourier.hpp"
#include "jhbl/simulate.hpp"
#include "jhbl/solver.hpp"
#include "jhbl/uq.hpp"

namespace jhbl {

inline constexpr int kConfigVersion = 1;

enum class Modality { Fourier, Blur };

struct ForwardSettings {
    bool remove_bands = true;
    int band_width = 10;  // frequencies per band; 10 on a 128 grid
    double blur_gamma = 5e-3;
    bool anti_inverse_crime = true;

    bool operator==(const ForwardSettings&) const = default;
};

struct UqSettings {
    bool enabled = true;
    VarianceMethod method = VarianceMethod::Exact;
    int probes = 100;
    std::uint64_t seed = 0;
    Eigen::Index exact_cap = 4096;

    bool operator==(const UqSettings&) const = default;
};

struct RunConfig {
    Modality modality = Modality::Fourier;
    PhantomSpec phantom;
    NoiseSpec noise;
    ForwardSettings forward;
    int regularization_order = 1;
    SolverConfig solver;
    UqSettings uq;
    std::string output_dir = "out";

    bool operator==(const RunConfig&) const = default;
};

// Defaults of the two experiment families: Fourier sampling with first-order TV, SNR 2 and
// (eta_gamma, theta_gamma) = (2, 1e-3); deblurring with second-order TV, SNR 2 + j and
// (eta_gamma, theta_gamma) = (1, 1e-1).
inline RunConfig default_config(Modality modality, int n1 = 64, int frames = 4) {
    RunConfig c;
    c.modality = modality;
    c.phantom = moving_ellipse_phantom(n1, frames);
    c.forward.band_width = std::max(1, static_cast<int>(std::lround(10.0 * n1 / 128.0)));
    if (modality == Modality::Fourier) {
        c.noise.snr.assign(frames, 2.0);
        c.regularization_order = 1;
    } else {
        for (int j = 1; j <= frames; ++j) c.noise.snr.push_back(2.0 + j);
        c.regularization_order = 2;
        c.solver.hyper.eta_gamma = 1.0;
        c.solver.hyper.theta_gamma = 1e-1;
    }
    return c;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

template <class E>
struct EnumName {
    E value;
    const char* name;
};

inline constexpr EnumName<Modality> kModalities[] = {{Modality::Fourier, "fourier"}, {Modality::Blur, "blur"}};
inline constexpr EnumName<RecoveryMode> kModes[] = {{RecoveryMode::Joint, "joint"}, {RecoveryMode::Separate, "separate"}};
inline constexpr EnumName<VarianceMethod> kVarianceMethods[] = {{VarianceMethod::Exact, "exact"},
                                                                {VarianceMethod::Stochastic, "stochastic"}};
inline constexpr EnumName<ShapeKind> kShapeKinds[] = {{ShapeKind::Ellipse, "ellipse"}, {ShapeKind::Rectangle, "rectangle"}};

template <class E, std::size_t K>
std::string enum_to_string(E v, const EnumName<E> (&table)[K]) {
    for (const auto& e : table)
        if (e.value == v) return e.name;
    throw std::logic_error("unnamed enum value");
}

template <class E, std::size_t K>
E enum_from_string(const std::string& s, const EnumName<E> (&table)[K], const char* what) {
    for (const auto& e : table)
        if (s == e.name) return e.value;
    throw std::invalid_argument(std::string("config: unknown ") + what + " '" + s + "'");
}

// Reads obj[key] into out if present and rejects keys outside `allowed`.
class Reader {
public:
    Reader(const nlohmann::json& obj, std::string where, std::set<std::string> allowed) : obj_(obj), where_(std::move(where)) {
        if (!obj.is_object()) throw std::invalid_argument("config: '" + where_ + "' must be an object");
        for (const auto& [k, v] : obj.items())
            if (!allowed.contains(k)) throw std::invalid_argument("config: unknown key '" + where_ + "." + k + "'");
    }

    template <class T>
    void get(const char* key, T& out) const {
        if (!obj_.contains(key)) return;
        try {
            out = obj_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config: bad value for '" + where_ + "." + key + "': " + e.what());
        }
    }

    bool has(const char* key) const { return obj_.contains(key); }
    const nlohmann::json& at(const char* key) const { return obj_.at(key); }

private:
    const nlohmann::json& obj_;
    std::string where_;
};

inline nlohmann::json shape_to_json(const Shape& s) {
    return {{"kind", enum_to_string(s.kind, kShapeKinds)},
            {"center", s.center},
            {"semi_axes", s.semi_axes},
            {"angle", s.angle},
            {"intensity", s.intensity},
            {"rotation_rate", s.rotation_rate},
            {"translation", s.translation}};
}

inline Shape shape_from_json(const nlohmann::json& j, const std::string& where) {
    Reader r(j, where, {"kind", "center", "semi_axes", "angle", "intensity", "rotation_rate", "translation"});
    Shape s;
    std::string kind = enum_to_string(s.kind, kShapeKinds);
    r.get("kind", kind);
    s.kind = enum_from_string(kind, kShapeKinds, "shape kind");
    r.get("center", s.center);
    r.get("semi_axes", s.semi_axes);
    r.get("angle", s.angle);
    r.get("intensity", s.intensity);
    r.get("rotation_rate", s.rotation_rate);
    r.get("translation", s.translation);
    return s;
}

}  // namespace detail

inline nlohmann::json to_json(const PhantomSpec& p) {
    nlohmann::json bg = nlohmann::json::array(), el = nlohmann::json::array();
    for (const auto& s : p.background) bg.push_back(detail::shape_to_json(s));
    for (const auto& s : p.ellipses) el.push_back(detail::shape_to_json(s));
    return {{"n1", p.n1}, {"frames", p.frames}, {"background", bg}, {"ellipses", el}};
}

inline PhantomSpec phantom_from_json(const nlohmann::json& j) {
    detail::Reader r(j, "phantom", {"n1", "frames", "background", "ellipses"});
    PhantomSpec p;
    p.background.clear();
    p.ellipses.clear();
    r.get("n1", p.n1);
    r.get("frames", p.frames);
    if (r.has("background"))
        for (const auto& s : r.at("background")) p.background.push_back(detail::shape_from_json(s, "phantom.background[]"));
    if (r.has("ellipses"))
        for (const auto& s : r.at("ellipses")) p.ellipses.push_back(detail::shape_from_json(s, "phantom.ellipses[]"));
    validate_phantom(p);
    return p;
}

inline nlohmann::json to_json(const RunConfig& c) {
    const auto& h = c.solver.hyper;
    return {
        {"version", kConfigVersion},
        {"modality", detail::enum_to_string(c.modality, detail::kModalities)},
        {"phantom", to_json(c.phantom)},
        {"noise", {{"snr", c.noise.snr}, {"seed", c.noise.seed}}},
        {"forward",
         {{"remove_bands", c.forward.remove_bands},
          {"band_width", c.forward.band_width},
          {"blur_gamma", c.forward.blur_gamma},
          {"anti_inverse_crime", c.forward.anti_inverse_crime}}},
        {"regularization_order", c.regularization_order},
        {"solver",
         {{"mode", detail::enum_to_string(c.solver.mode, detail::kModes)},
          {"max_outer_iters", c.solver.max_outer_iters},
          {"tol", c.solver.tol},
          {"inner_gd_steps", c.solver.inner_gd_steps},
          {"threads", c.solver.threads},
          {"record_log_joint", c.solver.record_log_joint},
          {"hyper",
           {{"eta_alpha", h.eta_alpha},
            {"theta_alpha", h.theta_alpha},
            {"eta_beta", h.eta_beta},
            {"theta_beta", h.theta_beta},
            {"eta_gamma", h.eta_gamma},
            {"theta_gamma", h.theta_gamma}}}}},
        {"uq",
         {{"enabled", c.uq.enabled},
          {"method", detail::enum_to_string(c.uq.method, detail::kVarianceMethods)},
          {"probes", c.uq.probes},
          {"seed", c.uq.seed},
          {"exact_cap", c.uq.exact_cap}}},
        {"output_dir", c.output_dir},
    };
}

// Missing keys take the modality's defaults (sized from phantom.n1/frames when given);
// unknown keys are rejected.
inline RunConfig config_from_json(const nlohmann::json& j) {
    detail::Reader top(j, "config",
                       {"version", "modality", "phantom", "noise", "forward", "regularization_order", "solver", "uq",
                        "output_dir"});
    int version = kConfigVersion;
    top.get("version", version);
    if (version != kConfigVersion) throw std::invalid_argument("config: unsupported version " + std::to_string(version));

    std::string modality = "fourier";
    top.get("modality", modality);
    const auto mod = detail::enum_from_string(modality, detail::kModalities, "modality");

    int n1 = 64, frames = 4;
    if (top.has("phantom")) {
        const auto& p = top.at("phantom");
        if (p.is_object()) {
            if (p.contains("n1")) n1 = p.at("n1").get<int>();
            if (p.contains("frames")) frames = p.at("frames").get<int>();
        }
    }
    if (n1 <= 0 || frames <= 0) throw std::invalid_argument("config: phantom.n1 and phantom.frames must be positive");
    RunConfig c = default_config(mod, n1, frames);
    if (top.has("phantom")) {
        const auto& p = top.at("phantom");
        if (p.contains("background") || p.contains("ellipses")) {
            c.phantom = phantom_from_json(p);
        } else {
            detail::Reader(p, "phantom", {"n1", "frames"});
        }
    }

    if (top.has("noise")) {
        detail::Reader r(top.at("noise"), "noise", {"snr", "seed"});
        if (r.has("snr")) {
            const auto& s = r.at("snr");
            if (s.is_number())
                c.noise.snr.assign(c.phantom.frames, s.get<double>());
            else
                r.get("snr", c.noise.snr);
        }
        r.get("seed", c.noise.seed);
    }
    if (c.noise.snr.size() != static_cast<std::size_t>(c.phantom.frames))
        throw std::invalid_argument("config: noise.snr needs one value per frame");

    if (top.has("forward")) {
        detail::Reader r(top.at("forward"), "forward", {"remove_bands", "band_width", "blur_gamma", "anti_inverse_crime"});
        r.get("remove_bands", c.forward.remove_bands);
        r.get("band_width", c.forward.band_width);
        r.get("blur_gamma", c.forward.blur_gamma);
        r.get("anti_inverse_crime", c.forward.anti_inverse_crime);
    }
    top.get("regularization_order", c.regularization_order);
    if (c.regularization_order != 1 && c.regularization_order != 2)
        throw std::invalid_argument("config: regularization_order must be 1 or 2");

    if (top.has("solver")) {
        detail::Reader r(top.at("solver"), "solver",
                         {"mode", "max_outer_iters", "tol", "inner_gd_steps", "threads", "record_log_joint", "hyper"});
        std::string mode = detail::enum_to_string(c.solver.mode, detail::kModes);
        r.get("mode", mode);
        c.solver.mode = detail::enum_from_string(mode, detail::kModes, "solver mode");
        r.get("max_outer_iters", c.solver.max_outer_iters);
        r.get("tol", c.solver.tol);
        r.get("inner_gd_steps", c.solver.inner_gd_steps);
        r.get("threads", c.solver.threads);
        r.get("record_log_joint", c.solver.record_log_joint);
        if (r.has("hyper")) {
            auto& h = c.solver.hyper;
            detail::Reader hr(r.at("hyper"), "solver.hyper",
                              {"eta_alpha", "theta_alpha", "eta_beta", "theta_beta", "eta_gamma", "theta_gamma"});
            hr.get("eta_alpha", h.eta_alpha);
            hr.get("theta_alpha", h.theta_alpha);
            hr.get("eta_beta", h.eta_beta);
            hr.get("theta_beta", h.theta_beta);
            hr.get("eta_gamma", h.eta_gamma);
            hr.get("theta_gamma", h.theta_gamma);
        }
    }
    c.solver.validate();

    if (top.has("uq")) {
        detail::Reader r(top.at("uq"), "uq", {"enabled", "method", "probes", "seed", "exact_cap"});
        r.get("enabled", c.uq.enabled);
        std::string method = detail::enum_to_string(c.uq.method, detail::kVarianceMethods);
        r.get("method", method);
        c.uq.method = detail::enum_from_string(method, detail::kVarianceMethods, "uq method");
        r.get("probes", c.uq.probes);
        r.get("seed", c.uq.seed);
        r.get("exact_cap", c.uq.exact_cap);
    }
    top.get("output_dir", c.output_dir);
    return c;
}

// ---------------------------------------------------------------------------
// Forward operators and their descriptors
// ---------------------------------------------------------------------------

inline std::vector<OperatorPtr> build_operators(const RunConfig& c) {
    std::vector<OperatorPtr> ops;
    const int n1 = c.phantom.n1;
    for (int j = 1; j <= c.phantom.frames; ++j) {
        if (c.modality == Modality::Fourier) {
            FrequencySet removed;
            if (c.forward.remove_bands) removed = remove_bands(j, n1, c.forward.band_width).frequencies;
            ops.push_back(make_fourier_op(n1, std::move(removed)));
        } else {
            ops.push_back(make_blur_op(n1, c.forward.blur_gamma));
        }
    }
    return ops;
}

inline nlohmann::json operator_descriptor(const LinearOperator& op) {
    if (const auto* f = dynamic_cast<const FourierSamplingOp*>(&op)) {
        nlohmann::json removed = nlohmann::json::array();
        for (const auto& [k, l] : f->removed()) removed.push_back({k, l});
        return {{"type", "fourier"}, {"n1", f->n1()}, {"removed", removed}};
    }
    if (const auto* g = dynamic_cast<const GaussianBlurOp*>(&op))
        return {{"type", "blur"}, {"n1", g->n1()}, {"blur_gamma", g->blur_gamma()}};
    throw std::invalid_argument("operator_descriptor: unsupported operator " + op.name());
}

inline OperatorPtr operator_from_descriptor(const nlohmann::json& d) {
    const auto type = d.at("type").get<std::string>();
    const int n1 = d.at("n1").get<int>();
    if (type == "fourier") {
        FrequencySet removed;
        for (const auto& kl : d.at("removed")) removed.insert({kl.at(0).get<int>(), kl.at(1).get<int>()});
        return make_fourier_op(n1, std::move(removed));
    }
    if (type == "blur") return make_blur_op(n1, d.at("blur_gamma").get<double>());
    throw std::invalid_argument("operator descriptor: unknown type '" + type + "'");
}

}  // namespace jhbl
