#include "cli.hpp"

#include "qlab/measurement.hpp"
#include "qlab/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace qlab::cli {

namespace {

using nlohmann::ordered_json;

const char* const kGrammar = R"G(set expressions:
  expr     := atom { ("|" | "&" | "\" | "^") atom }
  atom     := "~" atom | interval | "{" number {"," number} "}" | "R" | "empty" | "(" expr ")"
  interval := ("(" | "[") bound "," bound (")" | "]"),  bound := number | "inf" | "-inf"
  number   := integer | decimal | integer "/" integer
effects:
  effect   := unary { "+" unary }            (+ is the orthosum)
  unary    := "~" unary | "const(" number ")" | "scale(" number "," effect ")"
            | "smear(" expr ";" density ")" | "(" effect ")"
  density  := ("box" | "triangle" | "gaussian") "(" number ")"
density models:
  "uniform(a,b)" | "gaussian(mu,sigma)" | "mixture(w: model, ...)"
states:
  point:<number> | density:<model> | sharp:<base.json> | escaping[:+|:-]
)G";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Rational rational_arg(const std::string& text, const char* flag) {
    auto r = parse_rational(text);
    if (!r) throw UsageError(std::string(flag) + ": not a number: '" + text + "'");
    return *r;
}

/// key=value lines; blank lines and '#' comments ignored.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw Error("cannot write '" + path + "'");
        }
        stream_ = path.empty() ? &fallback : &file_;
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

// ---------------------------------------------------------------------------
// sets

struct SetsArgs {
    std::string expr;
    bool measure = false;
    bool quotient = false;
    std::vector<std::string> contains;
    std::string format = "text";
};

void run_sets(const SetsArgs& a, std::ostream& out) {
    const auto s = parse_set_expr(a.expr);
    std::vector<std::pair<Rational, bool>> members;
    for (const auto& q : a.contains) members.emplace_back(rational_arg(q, "--contains"), false);
    for (auto& [q, in] : members) in = s.contains(q);
    if (a.format == "json") {
        ordered_json j;
        j["set"] = to_string(s);
        j["measure"] = to_string(measure(s));
        j["class"] = to_string(project(s));
        ordered_json m = ordered_json::array();
        for (const auto& [q, in] : members) m.push_back({{"q", to_string(q)}, {"member", in}});
        j["membership"] = m;
        out << j.dump(2) << "\n";
        return;
    }
    if (!a.measure && !a.quotient && members.empty()) out << to_string(s) << "\n";
    if (a.measure) out << to_string(measure(s)) << "\n";
    if (a.quotient) out << to_string(project(s)) << "\n";
    for (const auto& [q, in] : members) out << to_string(q) << (in ? " in " : " not in ") << "set\n";
}

// ---------------------------------------------------------------------------
// construct

struct ConstructArgs {
    std::string lambda = "0";
    std::uint64_t m = 3;
    std::uint64_t depth = 16;
    std::uint64_t components = 64;
    std::string format = "json";
    std::string out;
};

bool disjoint(const Interval& a, const Interval& b) {
    // both open
    return a.hi() <= b.lo() || b.hi() <= a.lo();
}

const char* status_name(MeetStatus s) {
    switch (s) {
        case MeetStatus::nonzero: return "nonzero";
        case MeetStatus::zero: return "zero";
        default: return "unresolved";
    }
}

ordered_json interval_json(const Interval& i) {
    return {{"lo", to_string(i.lo())}, {"hi", to_string(i.hi())}, {"text", to_string(i)}};
}

int run_construct(const ConstructArgs& a, std::ostream& out) {
    if (a.m == 0 || a.components == 0) throw UsageError("--m and --components must be at least 1");
    const Rational lambda = rational_arg(a.lambda, "--lambda");
    std::vector<std::vector<Interval>> table(a.m);
    for (std::uint64_t m = 1; m <= a.m; ++m)
        for (std::uint64_t n = 1; n <= a.components; ++n) table[m - 1].push_back(disjoint_family_component(lambda, m, n));

    ordered_json j;
    j["lambda"] = to_string(lambda);
    j["depth"] = a.depth;
    j["components"] = a.components;

    bool all_ok = true;
    ordered_json fams = ordered_json::array();
    for (std::uint64_t m = 1; m <= a.m; ++m) {
        const auto fam = disjoint_family(lambda, m);
        ordered_json comps = ordered_json::array();
        bool open_nonempty = true;
        for (std::uint64_t n = 1; n <= a.components; ++n) {
            const auto& c = table[m - 1][n - 1];
            open_nonempty = open_nonempty && !c.lo_closed() && !c.hi_closed() && c.lo() < c.hi();
            auto cj = interval_json(c);
            cj.erase("text");
            comps.push_back({{"n", n}, {"lo", cj["lo"]}, {"hi", cj["hi"]}});
        }
        // left end of the last component minus lambda bounds the distance to the closure point
        const Rational gap = table[m - 1].back().lo().value() - lambda;
        const bool closure = gap <= pow2(1 - static_cast<long>(a.components));
        all_ok = all_ok && open_nonempty && closure;
        fams.push_back({{"m", m},
                        {"label", fam.label()},
                        {"open_nonempty", open_nonempty},
                        {"last_left_gap", to_string(gap)},
                        {"lambda_in_closure", closure},
                        {"tail_hull", {{"from", a.components + 1}, {"hull", interval_json(fam.tail_hull(a.components + 1))}}},
                        {"components", comps}});
    }
    j["families"] = fams;

    // disjointness across families, exact over the tabulated indices; the
    // envelope (lambda + 2^-n, lambda + 2^-n+1) separates everything beyond
    ordered_json matrix = ordered_json::array();
    for (std::uint64_t i = 0; i < a.m; ++i) {
        ordered_json row = ordered_json::array();
        for (std::uint64_t k = 0; k < a.m; ++k) {
            bool ok = i != k;
            for (std::uint64_t n1 = 0; ok && n1 < a.components; ++n1)
                for (std::uint64_t n2 = 0; ok && n2 < a.components; ++n2) ok = disjoint(table[i][n1], table[k][n2]);
            if (i != k) all_ok = all_ok && ok;
            row.push_back(ok);
        }
        matrix.push_back(row);
    }
    j["disjoint"] = matrix;

    ordered_json certs = ordered_json::array();
    const FilterBase f0 = neighborhood_base(lambda, a.depth);
    for (std::uint64_t m = 1; m <= a.m; ++m) {
        ordered_json meets = ordered_json::array();
        FmpCertificate cert;
        try {
            cert = has_fmp(adjoin(f0, disjoint_family(lambda, m), a.depth), a.depth);
        } catch (const FmpViolation&) {
            cert.holds = false;
        }
        for (const auto& cm : cert.checked) {
            ordered_json mj{{"indices", cm.indices}, {"status", status_name(cm.verdict.status)}};
            mj["witness"] = cm.verdict.witness ? interval_json(*cm.verdict.witness) : ordered_json(nullptr);
            meets.push_back(mj);
        }
        all_ok = all_ok && cert.holds;
        certs.push_back({{"m", m}, {"holds", cert.holds}, {"full_meet_certified", cert.full_meet_certified}, {"meets", meets}});
    }
    j["fmp"] = certs;
    j["ok"] = all_ok;

    if (a.format == "json") {
        out << j.dump(2) << "\n";
    } else {
        out << "lambda " << j["lambda"].get<std::string>() << ", depth " << a.depth << ", components 1.." << a.components << "\n";
        for (const auto& f : j["families"]) {
            const auto& first = f["components"][0];
            out << f["label"].get<std::string>() << ": first (" << first["lo"].get<std::string>() << ", "
                << first["hi"].get<std::string>() << "), open and nonempty " << (f["open_nonempty"].get<bool>() ? "yes" : "no")
                << ", lambda in closure " << (f["lambda_in_closure"].get<bool>() ? "yes" : "no") << "\n";
        }
        for (const auto& c : j["fmp"])
            out << "F_0 + B_" << c["m"].get<std::uint64_t>() << ": FMP to depth " << a.depth << " "
                << (c["holds"].get<bool>() ? "holds" : "fails") << " (" << c["meets"].size() << " meets checked)\n";
        out << (all_ok ? "all checks passed" : "some checks failed") << "\n";
    }
    return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// smear

struct SmearArgs {
    std::string set;
    std::string density = "gaussian";
    std::string param = "1";
    std::string from = "-3", to = "3", step = "1/8";
    std::string out;
};

void run_smear(const SmearArgs& a, std::ostream& out) {
    const auto s = parse_set_expr(a.set);
    const auto e = parse_confidence_density(a.density + "(" + a.param + ")");
    const Rational from = rational_arg(a.from, "--from"), to = rational_arg(a.to, "--to"),
                   step = rational_arg(a.step, "--step");
    if (step <= 0) throw UsageError("--step must be positive");
    if (to < from) throw UsageError("--to must not be below --from");
    const Rational count = (to - from) / step;
    if (count > 10000000) throw UsageError("more than 10^7 rows requested");
    const auto f = Effect::smear(s, e);
    out << "q,value\n";
    for (Rational q = from; q <= to; q += step) out << to_string(q) << "," << num(f(to_double(q))) << "\n";
}

// ---------------------------------------------------------------------------
// state

struct StateArgs {
    std::string state;
    std::string effect;
    std::optional<std::uint64_t> depth;
    double tol = 1e-10;
};

IntervalSet set_field(const ordered_json& v) {
    if (!v.is_string()) throw Error("base file: set expressions must be strings");
    return parse_set_expr(v.get<std::string>());
}

/// Base file:
///   {"lambda": "0", "depth": 1099511627776, "adjoin": ["(0,inf)"], "families": [2], "k": 2}
/// or {"classes": ["(1,inf)", "(2,inf)"]} for a base given by explicit classes.
SharpState load_base(const std::string& path, const StateArgs& a) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read base file '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("base file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw Error("base file must hold a JSON object");
    SharpState st{{}, 0, a.tol};
    if (j.contains("classes")) {
        std::vector<BaseElement> els;
        for (const auto& v : j["classes"]) els.emplace_back(project(set_field(v)));
        st.base = FilterBase::from_classes(std::move(els));
        st.depth = j.value("depth", static_cast<std::uint64_t>(st.base.size()));
    } else {
        if (!j.contains("lambda")) throw Error("base file needs \"lambda\" or \"classes\"");
        const auto lam = parse_rational(j["lambda"].is_string() ? j["lambda"].get<std::string>() : j["lambda"].dump());
        if (!lam) throw Error("base file: bad lambda");
        st.depth = j.value("depth", std::uint64_t{1} << 40);
        const std::uint64_t k = j.value("k", std::uint64_t{2});
        st.base = neighborhood_base(*lam, st.depth);
        if (j.contains("adjoin"))
            for (const auto& v : j["adjoin"]) st.base = adjoin(st.base, project(set_field(v)), k);
        if (j.contains("families"))
            for (const auto& v : j["families"]) st.base = adjoin(st.base, disjoint_family(*lam, v.get<std::uint64_t>()), k);
    }
    if (a.depth) st.depth = *a.depth;
    return st;
}

StateHandle parse_state(const StateArgs& a) {
    const auto colon = a.state.find(':');
    const std::string kind = a.state.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : a.state.substr(colon + 1);
    if (kind == "point") return PointState{rational_arg(rest, "--state point")};
    if (kind == "density") return DensityState{parse_density_model(rest), a.tol};
    if (kind == "sharp") return load_base(rest, a);
    if (kind == "escaping") {
        if (rest.empty() || rest == "+" || rest == "+inf") return EscapingState{1};
        if (rest == "-" || rest == "-inf") return EscapingState{-1};
    }
    throw UsageError("--state: expected point:<number>, density:<model>, sharp:<file> or escaping[:+|:-]");
}

void run_state(const StateArgs& a, std::ostream& out) {
    if (!(a.tol > 0)) throw UsageError("--tol must be positive");
    const auto state = parse_state(a);
    const auto f = parse_effect_expr(a.effect);
    const auto v = evaluate(state, f);
    ordered_json j;
    j["state"] = a.state;
    j["effect"] = f.to_string();
    j["value"] = v ? ordered_json(*v) : ordered_json("undetermined");
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string density;
    unsigned level = 4;
    std::size_t n = 100000;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out;
};

void run_simulate(const SimulateArgs& a, std::uint64_t seed, std::ostream& out, std::ostream& err) {
    if (a.n == 0) throw UsageError("--n must be at least 1");
    if (a.level > 60) throw UsageError("--level must be at most 60");
    const auto d = parse_density_model(a.density);
    const auto rec = run_protocol(d, a.level, a.n, seed, a.threads);
    const auto report = frequency_report(d, rec);
    {
        Output csv(a.out, out);
        *csv << "cell_lo,cell_hi,count,freq,p,deviation\n";
        for (const auto& c : report)
            *csv << to_string(c.lo) << "," << to_string(c.hi) << "," << c.count << "," << num(c.freq) << "," << num(c.p) << ","
                 << num(c.deviation) << "\n";
    }
    double worst = 0, total_p = 0;
    std::size_t beyond = 0;
    for (const auto& c : report) {
        worst = std::max(worst, c.deviation);
        total_p += c.p;
        if (c.deviation > 5) ++beyond;
    }
    ordered_json s;
    s["density"] = d.to_string();
    s["level"] = a.level;
    s["n"] = a.n;
    s["seed"] = seed;
    s["cells"] = report.size();
    s["occupied_cells"] = rec.counts.size();
    s["total_probability"] = total_p;
    s["max_deviation"] = worst;
    s["cells_beyond_5_sigma"] = beyond;
    // the summary goes to stdout when the table went to a file
    (a.out.empty() ? err : out) << s.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::string suite = "all";
    std::optional<std::uint64_t> cases;
    std::optional<std::uint64_t> seed;
};

int run_verify(const VerifyArgs& a, std::uint64_t seed, std::ostream& out) {
    VerifyOptions opts;
    opts.seed = seed;
    opts.cases = a.cases;
    int failed = 0;
    const auto results = run_suite(a.suite, opts, [&](const CriterionResult& r) {
        out << format_result(r) << "\n" << std::flush;
        if (!r.passed) ++failed;
    });
    if (results.size() > 1) out << results.size() - failed << " of " << results.size() << " passed\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace

std::optional<std::uint64_t> seed_from_environment() {
    const char* v = std::getenv("QLAB_SEED");
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const auto s = std::strtoull(v, &end, 10);
    if (*end != '\0') return std::nullopt;
    return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::optional<std::uint64_t> env_seed) {
    CLI::App app{"Exact interval-set algebra, filter-base states and unsharp position effects.", "qlab"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.fallthrough();
    app.footer(std::string("\n") + kGrammar + "\nseed: --seed, else config 'seed', else QLAB_SEED, else " +
               std::to_string(kDefaultSeed) + "\nexit: 0 ok, 1 domain error, 2 usage error");
    std::string config_path;
    app.add_option("--config", config_path, "key=value file; command-line flags take precedence");

    SetsArgs sets;
    auto* sets_cmd = app.add_subcommand("sets", "Evaluate a set expression");
    sets_cmd->add_option("--expr", sets.expr, "set expression");
    sets_cmd->add_flag("--measure", sets.measure, "print the Lebesgue measure");
    sets_cmd->add_flag("--quotient", sets.quotient, "print the class modulo null sets");
    sets_cmd->add_option("--contains", sets.contains, "membership test for a point")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sets_cmd->add_option("--format", sets.format)->check(CLI::IsMember({"text", "json"}));

    ConstructArgs cons;
    auto* cons_cmd = app.add_subcommand("construct", "Report on the disjoint families B_1..B_m at lambda");
    cons_cmd->add_option("--lambda", cons.lambda, "closure point")->capture_default_str();
    cons_cmd->add_option("--m", cons.m, "number of families")->capture_default_str();
    cons_cmd->add_option("--depth", cons.depth, "FMP depth")->capture_default_str()->check(CLI::Range(1, 4096));
    cons_cmd->add_option("--components", cons.components, "components tabulated per family")->capture_default_str()->check(CLI::Range(1, 4096));
    cons_cmd->add_option("--format", cons.format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    cons_cmd->add_option("--out", cons.out, "output file (default stdout)");

    SmearArgs sm;
    auto* sm_cmd = app.add_subcommand("smear", "Tabulate smear(S, e) as CSV");
    sm_cmd->add_option("--set", sm.set, "set expression");
    sm_cmd->add_option("--density", sm.density)->check(CLI::IsMember({"box", "triangle", "gaussian"}))->capture_default_str();
    sm_cmd->add_option("--param", sm.param, "width w, half-width h or sigma")->capture_default_str();
    sm_cmd->add_option("--from", sm.from)->capture_default_str();
    sm_cmd->add_option("--to", sm.to)->capture_default_str();
    sm_cmd->add_option("--step", sm.step)->capture_default_str();
    sm_cmd->add_option("--out", sm.out, "output file (default stdout)");

    StateArgs st;
    auto* st_cmd = app.add_subcommand("state", "Value of an effect in a state, as JSON");
    st_cmd->add_option("--state", st.state, "point:<q> | density:<model> | sharp:<base.json> | escaping[:+|:-]");
    st_cmd->add_option("--effect", st.effect, "effect expression");
    st_cmd->add_option("--depth", st.depth, "base depth for sharp states");
    st_cmd->add_option("--tol", st.tol)->capture_default_str();

    SimulateArgs simu;
    auto* sim_cmd = app.add_subcommand("simulate", "Finite-precision position measurement");
    sim_cmd->add_option("--density", simu.density, "density model");
    sim_cmd->add_option("--level", simu.level, "dyadic level n (cells of width 2^-n)")->capture_default_str();
    sim_cmd->add_option("--n", simu.n, "number of draws")->capture_default_str();
    sim_cmd->add_option("--seed", simu.seed);
    sim_cmd->add_option("--threads", simu.threads)->capture_default_str()->check(CLI::Range(1, 256));
    sim_cmd->add_option("--out", simu.out, "CSV file; the JSON summary then goes to stdout");

    VerifyArgs ver;
    auto* ver_cmd = app.add_subcommand("verify", "Run acceptance criteria");
    std::vector<std::string> suites = suite_names();
    suites.push_back("all");
    ver_cmd->add_option("--suite", ver.suite)->check(CLI::IsMember(suites))->capture_default_str();
    ver_cmd->add_option("--cases", ver.cases, "number of random cases, where a criterion draws them");
    ver_cmd->add_option("--seed", ver.seed);

    try {
        // config values go in front of the user's flags; TakeLast lets flags win
        std::vector<std::string> argv = args;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
        }
        if (!config_path.empty()) {
            std::size_t sub = 0;
            while (sub < argv.size() && (argv[sub].rfind("-", 0) == 0 || (sub > 0 && argv[sub - 1] == "--config"))) ++sub;
            if (sub < argv.size()) {
                CLI::App* cmd = app.get_subcommand_no_throw(argv[sub]);
                std::vector<std::string> injected;
                for (const auto& [key, value] : read_config(config_path)) {
                    bool known = false;
                    for (auto* c : app.get_subcommands({})) known = known || c->get_option_no_throw("--" + key) != nullptr;
                    if (!known) throw UsageError("config: unknown key '" + key + "'");
                    if (cmd && cmd->get_option_no_throw("--" + key)) injected.push_back("--" + key + "=" + value);
                }
                argv.insert(argv.begin() + static_cast<std::ptrdiff_t>(sub) + 1, injected.begin(), injected.end());
            }
        }
        std::reverse(argv.begin(), argv.end());
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "qlab: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const UsageError& e) {
        err << "qlab: " << e.what() << "\n";
        return 2;
    }

    auto resolve_seed = [&](const std::optional<std::uint64_t>& flag) { return flag.value_or(env_seed.value_or(kDefaultSeed)); };
    auto need = [](const std::string& v, const char* flag) {
        if (v.empty()) throw UsageError(std::string(flag) + " is required");
    };
    try {
        if (sets_cmd->parsed()) {
            need(sets.expr, "--expr");
            run_sets(sets, out);
        } else if (cons_cmd->parsed()) {
            Output o(cons.out, out);
            return run_construct(cons, *o);
        } else if (sm_cmd->parsed()) {
            need(sm.set, "--set");
            Output o(sm.out, out);
            run_smear(sm, *o);
        } else if (st_cmd->parsed()) {
            need(st.state, "--state");
            need(st.effect, "--effect");
            run_state(st, out);
        } else if (sim_cmd->parsed()) {
            need(simu.density, "--density");
            run_simulate(simu, resolve_seed(simu.seed), out, err);
        } else if (ver_cmd->parsed()) {
            return run_verify(ver, resolve_seed(ver.seed), out);
        }
        return 0;
    } catch (const UsageError& e) {
        err << "qlab: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "qlab: " << e.what() << "\n\n" << kGrammar;
        return 2;
    } catch (const Error& e) {
        err << "qlab: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "qlab: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace qlab::cli
