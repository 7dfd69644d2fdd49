#include "gsstyle/config.hpp"

#include "gsstyle/errors.hpp"

#include <fmt/core.h>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace gsstyle {

    namespace {

        namespace fs = std::filesystem;

        std::string join(std::string_view section, std::string_view key) {
            return section.empty() ? std::string(key) : fmt::format("{}.{}", section, key);
        }

        class Section {
        public:
            Section(const toml::table* table, std::string name)
                : table_(table),
                  name_(std::move(name)) {}

            bool present() const noexcept { return table_ != nullptr; }
            const std::string& name() const noexcept { return name_; }

            const toml::node* node(std::string_view key) const {
                used_.insert(std::string(key));
                return table_ ? table_->get(key) : nullptr;
            }

            std::string key(std::string_view k) const { return join(name_, k); }

            double number(std::string_view k, double fallback) const {
                const auto* n = node(k);
                if (!n) {
                    return fallback;
                }
                if (auto v = n->value<double>()) {
                    return *v;
                }
                throw ConfigError(key(k), fmt::format("{} must be a number", key(k)));
            }

            std::int64_t integer(std::string_view k, std::int64_t fallback) const {
                const auto* n = node(k);
                if (!n) {
                    return fallback;
                }
                if (n->is_integer()) {
                    return n->as_integer()->get();
                }
                throw ConfigError(key(k), fmt::format("{} must be an integer", key(k)));
            }

            bool boolean(std::string_view k, bool fallback) const {
                const auto* n = node(k);
                if (!n) {
                    return fallback;
                }
                if (n->is_boolean()) {
                    return n->as_boolean()->get();
                }
                throw ConfigError(key(k), fmt::format("{} must be true or false", key(k)));
            }

            std::optional<std::string> text(std::string_view k) const {
                const auto* n = node(k);
                if (!n) {
                    return std::nullopt;
                }
                if (n->is_string()) {
                    return n->as_string()->get();
                }
                throw ConfigError(key(k), fmt::format("{} must be a string", key(k)));
            }

            template <class T>
            std::optional<std::vector<T>> list(std::string_view k) const {
                const auto* n = node(k);
                if (!n) {
                    return std::nullopt;
                }
                const auto* arr = n->as_array();
                if (!arr) {
                    throw ConfigError(key(k), fmt::format("{} must be an array", key(k)));
                }
                std::vector<T> out;
                for (const auto& e : *arr) {
                    std::optional<T> v;
                    if constexpr (std::is_same_v<T, double>) {
                        v = e.value<double>();
                    } else {
                        if (e.is_integer()) {
                            v = static_cast<T>(e.as_integer()->get());
                        }
                    }
                    if (!v) {
                        throw ConfigError(key(k), fmt::format("{} has an element of the wrong type", key(k)));
                    }
                    out.push_back(*v);
                }
                return out;
            }

            /// Rejects keys this section does not know (catches typos in experiment files).
            void finish() const {
                if (!table_) {
                    return;
                }
                for (const auto& [k, v] : *table_) {
                    if (!used_.count(std::string(k.str()))) {
                        throw ConfigError(key(k.str()), fmt::format("unknown key {}", key(k.str())));
                    }
                }
            }

        private:
            const toml::table* table_;
            std::string name_;
            mutable std::set<std::string> used_;
        };

        Section section(const toml::table& root, std::string_view name, std::set<std::string>& seen) {
            seen.insert(std::string(name));
            const auto* n = root.get(name);
            if (n && !n->is_table()) {
                throw ConfigError(std::string(name), fmt::format("{} must be a table", name));
            }
            return Section(n ? n->as_table() : nullptr, std::string(name));
        }

        fs::path resolve(const fs::path& base, const std::string& p) {
            const fs::path path(p);
            return path.is_absolute() ? path : (base / path).lexically_normal();
        }

        fs::path required_file(const Section& s, std::string_view k, const fs::path& base) {
            const auto v = s.text(k);
            if (!v || v->empty()) {
                throw ConfigError(s.key(k), fmt::format("{} is required", s.key(k)));
            }
            auto p = resolve(base, *v);
            if (!fs::is_regular_file(p)) {
                throw ConfigError(s.key(k), fmt::format("{}: file not found: {}", s.key(k), p.string()));
            }
            return p;
        }

        double nonnegative(const Section& s, std::string_view k, double fallback) {
            const double v = s.number(k, fallback);
            if (!(v >= 0.0)) {
                throw ConfigError(s.key(k), fmt::format("{} must be >= 0, got {}", s.key(k), v));
            }
            return v;
        }

        ModeTimetable parse_timetable(const toml::array& rows, std::optional<std::int64_t> steps) {
            constexpr const char* key = "schedule.timetable";
            std::vector<TimetableEntry> entries;
            std::int64_t horizon = 0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto* t = rows.get(i)->as_table();
                if (!t) {
                    throw TimetableError(key, fmt::format("{}[{}] must be a table", key, i));
                }
                Section row(t, fmt::format("{}[{}]", key, i));
                TimetableEntry e;
                e.start = row.integer("start", -1);
                e.end = row.integer("end", -1);
                const auto phase_text = row.text("phase");
                if (!phase_text) {
                    throw TimetableError(row.key("phase"), fmt::format("{} is required", row.key("phase")));
                }
                const auto phase = parse_phase(*phase_text);
                if (!phase) {
                    throw TimetableError(row.key("phase"), fmt::format("unknown phase '{}'", *phase_text));
                }
                e.phase = *phase;
                e.overlay = row.boolean("overlay", e.phase == Phase::LocalRgb);
                row.finish();
                if (e.phase != Phase::LocalRgb) {
                    horizon = std::max(horizon, e.end);
                }
                entries.push_back(e);
            }
            return ModeTimetable(std::move(entries), steps.value_or(horizon));
        }

    } // namespace

    RunConfig parse_run_config(const std::string& toml_text, const fs::path& base_dir, const fs::path& source) {
        toml::table root;
        try {
            root = toml::parse(toml_text, source.string());
        } catch (const toml::parse_error& e) {
            const auto& where = e.source().begin;
            throw ConfigError("", fmt::format("{}:{}:{}: {}", source.string(), where.line, where.column,
                                              std::string(e.description())));
        }

        RunConfig c;
        c.source = source;
        std::set<std::string> seen;

        const Section run = section(root, "run", seen);
        if (!run.node("seed")) {
            throw ConfigError("run.seed", "run.seed is required (runs are never seeded from the clock)");
        }
        const auto seed = run.integer("seed", 0);
        if (seed < 0) {
            throw ConfigError("run.seed", "run.seed must be >= 0");
        }
        c.seed = static_cast<std::uint64_t>(seed);
        if (run.node("steps")) {
            c.steps = run.integer("steps", 0);
            if (*c.steps < 0) {
                throw ConfigError("run.steps", "run.steps must be >= 0");
            }
        }
        run.finish();

        const Section scene = section(root, "scene", seen);
        c.scene_ply = required_file(scene, "ply", base_dir);
        c.cameras = required_file(scene, "cameras", base_dir);
        if (auto bg = scene.list<double>("background")) {
            if (bg->size() != 3) {
                throw ConfigError("scene.background", "scene.background needs three values");
            }
            c.background = {(*bg)[0], (*bg)[1], (*bg)[2]};
        }
        scene.finish();

        const Section style = section(root, "style", seen);
        c.style_image = required_file(style, "image", base_dir);
        c.content_text = style.text("content_text").value_or("");
        if (c.content_text.empty()) {
            throw ConfigError("style.content_text", "style.content_text is required");
        }
        c.style_text = style.text("style_text");
        if (c.style_text && c.style_text->empty()) {
            c.style_text.reset();
        }
        c.mask_threshold = style.number("mask_threshold", c.mask_threshold);
        if (!(c.mask_threshold > 0.0 && c.mask_threshold < 1.0)) {
            throw ConfigError("style.mask_threshold", "style.mask_threshold must lie in (0, 1)");
        }
        style.finish();

        const Section output = section(root, "output", seen);
        c.output_dir = resolve(base_dir, output.text("dir").value_or("output"));
        c.checkpoint_every = output.integer("checkpoint_every", 0);
        if (c.checkpoint_every < 0) {
            throw ConfigError("output.checkpoint_every", "must be >= 0");
        }
        c.previews = output.boolean("previews", true);
        output.finish();

        const Section prov = section(root, "providers", seen);
        c.providers.backend = prov.text("backend").value_or("toy");
        if (c.providers.backend != "toy" && c.providers.backend != "external") {
            throw ConfigError("providers.backend",
                              fmt::format("providers.backend must be \"toy\" or \"external\", got \"{}\"", c.providers.backend));
        }
        c.providers.seed = c.seed;
        const auto emb = prov.integer("embedding_dim", 64);
        const auto desc = prov.integer("descriptor_dim", 64);
        if (emb < 2) {
            throw ConfigError("providers.embedding_dim", "must be >= 2");
        }
        if (desc < 1) {
            throw ConfigError("providers.descriptor_dim", "must be >= 1");
        }
        c.providers.embedding_dim = static_cast<std::size_t>(emb);
        c.providers.descriptor_dim = static_cast<std::size_t>(desc);
        c.providers.style_shift = prov.number("style_shift", c.providers.style_shift);
        if (auto dir = prov.text("model_dir")) {
            c.providers.external_model_dir = resolve(base_dir, *dir).string();
        }
        if (prov.node("score_target")) {
            c.score_target = required_file(prov, "score_target", base_dir);
        }
        prov.finish();

        const Section sched = section(root, "schedule", seen);
        auto& sc = c.weights.dssd.schedule;
        sc.total_timesteps = static_cast<int>(sched.integer("total_timesteps", sc.total_timesteps));
        sc.t_min = static_cast<int>(sched.integer("t_min", sc.t_min));
        sc.t_max = static_cast<int>(sched.integer("t_max", sc.t_max));
        sc.lambda_max = sched.number("lambda_max", sc.lambda_max);
        sc.validate();
        c.providers.total_timesteps = sc.total_timesteps;
        c.n_opt = static_cast<int>(sched.integer("n_opt", c.n_opt));
        if (c.n_opt < 1) {
            throw ConfigError("schedule.n_opt", "schedule.n_opt must be >= 1");
        }
        const auto start_view = sched.integer("start_view", 0);
        if (start_view < 0) {
            throw ConfigError("schedule.start_view", "must be >= 0");
        }
        c.start_view = static_cast<std::size_t>(start_view);
        c.fix_free_block = sched.integer("fix_free_block", c.fix_free_block);
        if (c.fix_free_block < 1) {
            throw ConfigError("schedule.fix_free_block", "must be >= 1");
        }
        if (const auto* tt = sched.node("timetable")) {
            const auto* arr = tt->as_array();
            if (!arr) {
                throw TimetableError("schedule.timetable", "schedule.timetable must be an array of tables");
            }
            c.timetable = parse_timetable(*arr, c.steps);
        }
        sched.finish();

        const Section w = section(root, "weights", seen);
        auto& ew = c.weights;
        ew.lambda_style = nonnegative(w, "lambda_style", ew.lambda_style);
        ew.lambda_sos = nonnegative(w, "lambda_sos", ew.lambda_sos);
        ew.lambda_csd = nonnegative(w, "lambda_csd", ew.lambda_csd);
        ew.lambda_qa = nonnegative(w, "lambda_qa", ew.lambda_qa);
        ew.dssd.lambda_z = nonnegative(w, "lambda_z", ew.dssd.lambda_z);
        ew.dssd.lambda_x = nonnegative(w, "lambda_x", ew.dssd.lambda_x);
        ew.dssd.lambda_dssd = nonnegative(w, "lambda_dssd", ew.dssd.lambda_dssd);
        ew.dssd.lambda_rgb = nonnegative(w, "lambda_rgb", ew.dssd.lambda_rgb);
        ew.dssd.lambda_mask = nonnegative(w, "lambda_mask", ew.dssd.lambda_mask);
        if (auto omega = w.text("omega")) {
            if (*omega == "constant_one") {
                ew.dssd.weighting = TimestepWeighting::ConstantOne;
            } else if (*omega == "one_minus_alpha_bar") {
                ew.dssd.weighting = TimestepWeighting::OneMinusAlphaBar;
            } else {
                throw ConfigError("weights.omega",
                                  fmt::format("weights.omega must be constant_one or one_minus_alpha_bar, got {}", *omega));
            }
        }
        w.finish();
        ew.validate();

        const Section sos = section(root, "sos", seen);
        c.sos_preset = sos.text("preset").value_or(c.sos_preset);
        if (c.sos_preset != "five_layer" && c.sos_preset != "three_layer") {
            throw ConfigError("sos.preset", "sos.preset must be five_layer or three_layer");
        }
        c.sos_layers = sos.list<int>("layers").value_or(std::vector<int>{});
        c.sos_weights = sos.list<double>("weights").value_or(std::vector<double>{});
        c.sos_scales = sos.list<double>("scales").value_or(c.sos_scales);
        c.sos_pretrain_iterations = static_cast<long>(sos.integer("pretrain_iterations", 0));
        c.sos_pretrain_scale = sos.number("pretrain_scale", c.sos_pretrain_scale);
        sos.finish();

        const Section qa = section(root, "qa", seen);
        if (auto qw = qa.list<double>("weights")) {
            if (qw->size() != c.qa.criteria.size()) {
                throw ConfigError("qa.weights", fmt::format("qa.weights needs {} values", c.qa.criteria.size()));
            }
            for (std::size_t i = 0; i < qw->size(); ++i) {
                c.qa.criteria[i].weight = (*qw)[i];
            }
        }
        for (auto& crit : c.qa.criteria) {
            if (auto p = qa.text(crit.name + "_positive")) {
                crit.positive = *p;
            }
            if (auto n = qa.text(crit.name + "_negative")) {
                crit.negative = *n;
            }
        }
        qa.finish();
        c.qa.validate();

        const Section opt = section(root, "optimizer", seen);
        c.adam.lr_dc = nonnegative(opt, "lr_dc", c.adam.lr_dc);
        c.adam.lr_rest = nonnegative(opt, "lr_rest", c.adam.lr_rest);
        c.adam.beta1 = opt.number("beta1", c.adam.beta1);
        c.adam.beta2 = opt.number("beta2", c.adam.beta2);
        c.adam.eps = opt.number("eps", c.adam.eps);
        if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0)) {
            throw ConfigError("optimizer.beta1", "must lie in [0, 1)");
        }
        if (!(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0)) {
            throw ConfigError("optimizer.beta2", "must lie in [0, 1)");
        }
        c.train_sh_rest = opt.boolean("train_sh_rest", true);
        opt.finish();

        for (const auto& [k, v] : root) {
            if (!seen.count(std::string(k.str()))) {
                throw ConfigError(std::string(k.str()), fmt::format("unknown section or key '{}'", k.str()));
            }
        }

        // Surfaces coverage problems at load time rather than mid-run.
        (void)resolve_timetable(c);
        return c;
    }

    RunConfig load_run_config(const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw ConfigError("", fmt::format("cannot read config file {}", path.string()));
        }
        std::stringstream buf;
        buf << in.rdbuf();
        const fs::path dir = fs::absolute(path).parent_path();
        return parse_run_config(buf.str(), dir, path);
    }

    SOSConfig resolve_sos(const RunConfig& config, const FeatureExtractor& extractor) {
        SOSConfig s = config.sos_preset == "three_layer" ? SOSConfig::three_layer(extractor)
                                                          : SOSConfig::five_layer(extractor);
        if (!config.sos_layers.empty()) {
            s.layers = config.sos_layers;
            s.weights.clear();
            for (int l : s.layers) {
                const double ch = extractor.channels(l);
                s.weights.push_back(1e3 / (ch * ch));
            }
        }
        if (!config.sos_weights.empty()) {
            s.weights = config.sos_weights;
        }
        s.scales = config.sos_scales;
        s.pretrain_iterations = config.sos_pretrain_iterations;
        s.pretrain_scale = config.sos_pretrain_scale;
        s.validate();
        return s;
    }

    ModeTimetable resolve_timetable(const RunConfig& config) {
        ModeTimetable base = config.timetable ? *config.timetable : default_timetable(config.fix_free_block);
        if (!config.steps || *config.steps == base.total_steps()) {
            return base;
        }
        const std::int64_t steps = *config.steps;
        std::vector<TimetableEntry> cut;
        for (auto e : base.entries()) {
            if (e.start >= steps) {
                continue;
            }
            e.end = std::min(e.end, steps);
            cut.push_back(e);
        }
        return ModeTimetable(std::move(cut), steps);
    }

    TrainerConfig make_trainer_config(const RunConfig& config, const FeatureExtractor& extractor) {
        TrainerConfig t;
        t.objective.weights = config.weights;
        t.objective.sos = resolve_sos(config, extractor);
        t.objective.qa = config.qa;
        t.objective.background = config.background;
        t.objective.seed = config.seed;
        t.adam = config.adam;
        t.train_sh_rest = config.train_sh_rest;
        t.n_opt = config.n_opt;
        t.start_view = config.start_view;
        t.timetable = resolve_timetable(config);
        t.checkpoint_every = config.checkpoint_every;
        t.checkpoint_dir = config.output_dir / "checkpoints";
        return t;
    }

} // namespace gsstyle
