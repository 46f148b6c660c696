// skelmax: experiment runner for discretized k-skeleton maximal operators.
//
// Subcommands: eval, norm-scan, witness, select, boxdim,
//              verify {duality, intersections, upper-bound, main-lemma,
//                      domination, rescaling}, run.
// Exit codes: 0 all-pass, 1 verification failure, 2 config error,
//             3 resource rejection.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skelmax/csv.hpp"
#include "skelmax/domination.hpp"
#include "skelmax/extremal.hpp"
#include "skelmax/field_io.hpp"
#include "skelmax/normlab.hpp"
#include "skelmax/svg.hpp"

using nlohmann::json;
using namespace skelmax;

namespace {

constexpr const char* kVersion = "skelmax 0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// "2^-4" | "0.0625"
double parseDelta(const std::string& tok) {
    if (tok.rfind("2^", 0) == 0) {
        int e = std::stoi(tok.substr(2));
        return std::ldexp(1.0, e);
    }
    return std::stod(tok);
}

// "2^-4..2^-8" (dyadic range) or comma list of tokens
std::vector<double> parseDeltas(const std::string& s) {
    std::vector<double> out;
    auto dots = s.find("..");
    if (dots != std::string::npos) {
        double a = parseDelta(s.substr(0, dots));
        double b = parseDelta(s.substr(dots + 2));
        if (a < b) std::swap(a, b);
        for (double d = a; d >= b * (1.0 - 1e-12); d /= 2.0) out.push_back(d);
        return out;
    }
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parseDelta(tok));
    return out;
}

void requireDyadicDelta(double delta) {
    if (!(delta >= std::ldexp(1.0, -12) - 1e-15 && delta <= 0.25 + 1e-15))
        throw ConfigError("delta must lie in [2^-12, 2^-2]");
    double l = std::log2(delta);
    if (std::abs(l - std::round(l)) > 1e-9)
        throw ConfigError("delta must be a reciprocal power of 2");
}

// memory check: field + prefix table on 7Q0 at this spacing
void requireMemory(int n, double delta, std::int64_t capMiB) {
    double cellsPerAxis = 7.0 / delta;
    double cells = 1.0;
    for (int i = 0; i < n; ++i) cells *= cellsPerAxis;
    double bytes = cells * 8.0 * 2.0;
    if (bytes > static_cast<double>(capMiB) * 1024.0 * 1024.0)
        throw ResourceError("estimated memory " + std::to_string(bytes / 1048576.0) +
                            " MiB exceeds the cap");
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hashFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot hash missing file: " + path);
    std::string body((std::istreambuf_iterator<char>(in)), {});
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(body.data(), body.size())));
    return buf;
}

void writeJson(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-error", "cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

Variant parseVariant(const std::string& s) {
    if (s == "restricted") return {Variant::Restricted, 0};
    if (s == "unrestricted") return {Variant::Unrestricted, 0};
    if (s.rfind("dyadic:", 0) == 0) return {Variant::Dyadic, std::stoi(s.substr(7))};
    throw ConfigError("unknown variant: " + s);
}

struct Timings {
    std::map<std::string, double> ms;

    template <typename F>
    auto time(const std::string& name, F&& f) {
        auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            ms[name] += std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0).count();
        } else {
            auto r = f();
            ms[name] += std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0).count();
            return r;
        }
    }
};

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    int n = 2, k = 1;
    double delta = 0.0;
    std::string variant = "restricted";
    std::string input, output, rhoFile, phiFile, argmaxOutput;
    int workers = 0;
};

int cmdEval(const EvalArgs& a) {
    ScalarField f = readField(a.input);
    if (f.spec.n != a.n) throw ConfigError("--n does not match the input field");
    double delta = a.delta > 0.0 ? a.delta : f.spec.delta;
    if (std::abs(delta - f.spec.delta) > 1e-12 * delta)
        throw ConfigError("operator width must equal the field spacing");
    SkeletonConfig cfg{a.n, a.k};
    cfg.validate();
    GridSpec eval = makeUnitDomain(a.n, delta);

    OperatorResult res;
    if (a.variant == "linearized") {
        if (a.rhoFile.empty() || a.phiFile.empty())
            throw ConfigError("linearized evaluation needs --rho-file and --phi-file");
        RadiusFunction rho = readRhoCsv(a.rhoFile, eval);
        FaceAssignment phi = readPhiCsv(a.phiFile, cfg, eval);
        res = evaluateLinearized(buildPrefix(f), rho, phi, delta, a.workers);
    } else {
        PrefixSumTable table = buildPrefix(absField(f));
        res = evaluateVariant(table, cfg, eval, parseVariant(a.variant), a.workers);
    }
    writeField(res.field, a.output);
    if (!a.argmaxOutput.empty() && res.argmaxRadii) {
        RadiusFunction rho;
        rho.grid = eval;
        rho.radii = *res.argmaxRadii;
        writeRhoCsv(rho, a.argmaxOutput);
    }
    return 0;
}

// ---- witness ----------------------------------------------------------------

struct WitnessArgs {
    int n = 2, k = 1;
    double delta = 1.0 / 32.0;
    std::string strategy = "coordinate-align";
    std::uint64_t seed = 1;
    int restarts = 4;
    std::int64_t annealMoves = 0;
    std::string outDir = ".";
};

json witnessReportJson(const WitnessReport& rep) {
    json j;
    j["delta"] = rep.delta;
    j["unionMeasure"] = rep.unionMeasure;
    j["strategy"] = rep.strategy;
    j["seed"] = rep.seed;
    j["restarts"] = rep.restarts;
    j["normLowerBound"] = {{"p1", rep.normLowerBound(1.0)}, {"p2", rep.normLowerBound(2.0)}};
    return j;
}

int cmdWitness(const WitnessArgs& a, Timings& tm, json* outputs = nullptr) {
    requireDyadicDelta(a.delta);
    SkeletonConfig cfg{a.n, a.k};
    cfg.validate();
    SearchOptions opt;
    opt.strategy = a.strategy;
    opt.seed = a.seed;
    opt.restarts = a.restarts;
    opt.annealMoves = a.annealMoves;
    WitnessReport rep = tm.time("witness-search", [&] {
        return searchRadiusFunction(cfg, a.delta, opt);
    });

    std::filesystem::create_directories(a.outDir);
    std::string rhoPath = a.outDir + "/witness_rho.csv";
    std::string occPath = a.outDir + "/witness_occupancy.bin";
    std::string repPath = a.outDir + "/witness_report.json";
    writeRhoCsv(rep.rho, rhoPath);
    GridSpec domain = makeCenteredDomain(a.n, a.delta, 7);
    writeField(rasterizeUnion(rep.rho, cfg, domain).indicator(), occPath);
    writeJson(witnessReportJson(rep), repPath);
    if (outputs) {
        (*outputs)["witness_rho"] = rhoPath;
        (*outputs)["witness_occupancy"] = occPath;
        (*outputs)["witness_report"] = repPath;
    }
    std::cout << "witness: strategy=" << a.strategy << " delta=" << a.delta
              << " unionMeasure=" << rep.unionMeasure << "\n";
    return 0;
}

// ---- select -----------------------------------------------------------------

struct SelectArgs {
    int n = 2, k = 1;
    double delta = 1.0 / 32.0;
    std::string input, outAssignment = "assignment.csv", outCertificate = "certificate.json";
};

json certificateJson(const SelectionCertificate& cert) {
    json j;
    j["u"] = cert.u;
    j["exponent"] = cert.exponent;
    j["tailThreshold"] = cert.tailThreshold;
    j["tailSize"] = cert.tailSize;
    j["distinctPlanes"] = cert.distinctPlanes;
    j["maxPerPlaneCount"] = cert.maxPerPlaneCount();
    j["stages"] = json::array();
    for (const auto& st : cert.stages) {
        json s;
        s["remaining"] = st.remaining;
        s["planesAlive"] = st.planesAlive;
        s["assigned"] = st.assigned;
        j["stages"].push_back(s);
    }
    return j;
}

std::string planeToken(const PlaneKey& key, double quantum) {
    std::string axes = "J=";
    std::string offs;
    bool first = true;
    int slot = 0;
    for (int i = 0; i < key.n; ++i) {
        if (!((key.normalMask >> i) & 1u)) continue;
        if (!first) { axes += ','; offs += ','; }
        axes += std::to_string(i + 1);
        offs += fmtDouble(static_cast<double>(key.offsetQ[slot++]) * quantum);
        first = false;
    }
    return axes + ";z=" + offs;
}

int cmdSelect(const SelectArgs& a) {
    SkeletonConfig cfg{a.n, a.k};
    cfg.validate();
    auto skeletons = readSkeletonCsv(a.input, a.n);
    const double quantum = a.delta / 2.0;
    SelectionResult res = greedySelect(cfg, skeletons, quantum);
    std::string bad = checkCertificate(res.certificate, a.n, a.k);
    if (!bad.empty()) throw Error("certificate-inconsistent", bad);

    std::ofstream out(a.outAssignment);
    if (!out) throw Error("io-error", "cannot open " + a.outAssignment);
    for (int i = 0; i < a.n; ++i) out << "x_" << (i + 1) << ',';
    out << "r,face,plane\n";
    for (std::size_t i = 0; i < skeletons.size(); ++i) {
        for (int ax = 0; ax < a.n; ++ax) out << fmtDouble(skeletons[i].center[ax]) << ',';
        out << fmtDouble(skeletons[i].halfSide) << ',' << faceToken(cfg, res.faces[i]) << ','
            << planeToken(planeOfFace(cfg, skeletons[i], res.faces[i], quantum), quantum) << '\n';
    }
    out.close();
    writeJson(certificateJson(res.certificate), a.outCertificate);
    std::cout << "select: u=" << res.certificate.u
              << " planes=" << res.certificate.distinctPlanes
              << " maxPerPlane=" << res.certificate.maxPerPlaneCount()
              << " tail=" << res.certificate.tailSize << "\n";
    return 0;
}

// ---- norm scan ----------------------------------------------------------------

struct ScanArgs {
    int n = 2, k = 1;
    double p = 1.0;
    std::string deltas = "2^-4..2^-6";
    std::string variant = "restricted";
    std::string candidates = "constant,random,bump,skeleton,witness";
    std::uint64_t seed = 1;
    std::string strategy = "coordinate-align";
    int restarts = 2;
    std::int64_t annealMoves = 0;
    std::string outDir = ".";
    int workers = 0;
    std::int64_t memoryCapMiB = 4096;
};

PoolOptions poolFromArgs(const ScanArgs& a) {
    PoolOptions pool;
    pool.constant = a.candidates.find("constant") != std::string::npos;
    pool.randomFields = a.candidates.find("random") != std::string::npos ? 1 : 0;
    pool.bumps = a.candidates.find("bump") != std::string::npos ? 1 : 0;
    pool.singleSkeletons = a.candidates.find("skeleton") != std::string::npos ? 1 : 0;
    pool.witnesses = a.candidates.find("witness") != std::string::npos;
    pool.searchOpt.strategy = a.strategy;
    pool.searchOpt.restarts = a.restarts;
    pool.searchOpt.annealMoves = a.annealMoves;
    return pool;
}

json scanJson(const NormScanResult& scan, const SkeletonConfig& cfg, double p) {
    json j;
    j["n"] = cfg.n;
    j["k"] = cfg.k;
    j["p"] = p;
    j["fit"] = {{"slope", scan.fit.slope},
                {"intercept", scan.fit.intercept},
                {"r2", scan.fit.r2}};
    j["theoreticalSlope"] =
        -static_cast<double>(cfg.n - cfg.k) / (2.0 * static_cast<double>(cfg.n) * p);
    j["bestPerDelta"] = json::array();
    for (const auto& [d, r] : scan.bestPerDelta)
        j["bestPerDelta"].push_back({{"delta", d}, {"ratio", r}});
    j["warnings"] = scan.warnings;
    return j;
}

int cmdNormScan(const ScanArgs& a, Timings& tm, json* outputs = nullptr) {
    SkeletonConfig cfg{a.n, a.k};
    cfg.validate();
    auto deltas = parseDeltas(a.deltas);
    if (deltas.empty()) throw ConfigError("empty delta list");
    for (double d : deltas) {
        requireDyadicDelta(d);
        requireMemory(a.n, d, a.memoryCapMiB);
    }
    PoolOptions pool = poolFromArgs(a);
    NormScanResult scan = tm.time("norm-scan", [&] {
        return runNormScan(cfg, a.p, deltas, parseVariant(a.variant), a.seed, pool, a.workers);
    });

    std::filesystem::create_directories(a.outDir);
    std::string csvPath = a.outDir + "/norm_scan.csv";
    std::string jsonPath = a.outDir + "/norm_scan_fit.json";
    std::string svgPath = a.outDir + "/norm_scan.svg";
    {
        std::ofstream out(csvPath);
        out << "delta,candidate,class,ratio\n";
        for (const auto& r : scan.rows)
            out << fmtDouble(r.delta) << ',' << r.candidateId << ',' << r.candidateClass << ','
                << fmtDouble(r.normRatio) << '\n';
    }
    writeJson(scanJson(scan, cfg, a.p), jsonPath);
    writeLogLogSvg(svgPath, scan.bestPerDelta, scan.fit.slope, scan.fit.intercept,
                   "operator norm ratios vs delta");
    if (outputs) {
        (*outputs)["norm_scan_csv"] = csvPath;
        (*outputs)["norm_scan_fit"] = jsonPath;
        (*outputs)["norm_scan_svg"] = svgPath;
    }
    std::cout << "norm-scan: fitted slope " << scan.fit.slope << " (R2 " << scan.fit.r2
              << ") over " << scan.bestPerDelta.size() << " scales\n";
    return 0;
}

// ---- boxdim -----------------------------------------------------------------

int cmdBoxDim(const std::vector<std::string>& inputs, const std::string& outJson) {
    if (inputs.size() < 3) throw ConfigError("need at least 3 occupancy files");
    std::vector<std::pair<double, double>> series;
    int n = 0;
    for (const auto& path : inputs) {
        ScalarField f = readField(path);
        n = f.spec.n;
        double sum = 0.0;
        for (double v : f.values) sum += v;
        series.emplace_back(f.spec.delta, sum * powi(f.spec.delta, f.spec.n));
    }
    double dim = boxDimEstimate(n, series);
    json j;
    j["dimension"] = dim;
    j["scales"] = json::array();
    for (const auto& [d, m] : series) j["scales"].push_back({{"delta", d}, {"measure", m}});
    if (!outJson.empty()) writeJson(j, outJson);
    std::cout << "boxdim: estimate " << dim << " from " << series.size() << " scales\n";
    return 0;
}

// ---- verify -----------------------------------------------------------------

struct VerifyContext {
    std::string outDir = ".";
    json* outputs = nullptr;
    int workers = 0;
};

int finishVerify(const std::string& name, bool pass, json detail, const VerifyContext& vc) {
    detail["check"] = name;
    detail["pass"] = pass;
    std::filesystem::create_directories(vc.outDir);
    std::string path = vc.outDir + "/verify_" + name + ".json";
    writeJson(detail, path);
    if (vc.outputs) (*vc.outputs)["verify_" + name] = path;
    std::cout << (pass ? "PASS" : "FAIL") << " verify " << name << "\n";
    return pass ? 0 : 1;
}

int verifyDomination(int n, int k, double delta, int trials, std::uint64_t seed,
                     const VerifyContext& vc) {
    SkeletonConfig cfg{n, k};
    cfg.validate();
    requireDyadicDelta(delta);
    GridSpec dom = makeCenteredDomain(n, delta, 7);
    GridSpec eval = makeUnitDomain(n, delta);
    Rng rng(seed);
    double worst = -1e300;
    std::int64_t violations = 0;
    for (int it = 0; it < trials; ++it) {
        ScalarField f = makeField(dom);
        for (double& v : f.values) v = rng.uniform();
        try {
            DominationResult res = buildDominatingRho(buildPrefix(f), cfg, eval, 1e-9, vc.workers);
            worst = std::max(worst, res.worstSlack);
        } catch (const Error&) {
            ++violations;
        }
    }
    json j;
    j["trials"] = trials;
    j["delta"] = delta;
    j["violations"] = violations;
    j["worstSlack"] = worst;
    return finishVerify("domination", violations == 0, j, vc);
}

int verifyRescaling(int n, int k, double delta, int trials, std::uint64_t seed,
                    const VerifyContext& vc) {
    SkeletonConfig cfg{n, k};
    cfg.validate();
    requireDyadicDelta(delta);
    GridSpec dom = makeCenteredDomain(n, delta, 7);
    GridSpec eval = makeUnitDomain(n, delta);
    Rng rng(seed);
    double worst = 0.0;
    for (int it = 0; it < trials; ++it) {
        ScalarField f = makeField(dom);
        for (double& v : f.values) v = rng.uniform();
        PrefixSumTable tf = buildPrefix(f);
        for (int t = -3; t <= -1; ++t) {
            OperatorResult dy = evaluateDyadic(tf, cfg, eval, t, vc.workers);
            double scale = std::ldexp(1.0, -t);
            ScalarField g = f;
            g.spec.delta = delta * scale;
            for (int i = 0; i < n; ++i) g.spec.origin[i] = f.spec.origin[i] * scale;
            GridSpec evalg = eval;
            evalg.delta = delta * scale;
            for (int i = 0; i < n; ++i) evalg.origin[i] = eval.origin[i] * scale;
            OperatorResult restr = evaluateRestricted(buildPrefix(g), cfg, evalg, vc.workers);
            for (std::size_t i = 0; i < dy.field.values.size(); ++i)
                worst = std::max(worst,
                                 std::abs(dy.field.values[i] - restr.field.values[i]));
        }
    }
    json j;
    j["trials"] = trials;
    j["delta"] = delta;
    j["worstAbsDiff"] = worst;
    return finishVerify("rescaling", worst <= 1e-9, j, vc);
}

int verifyDuality(int n, int k, double delta, double p, int trials, std::uint64_t seed,
                  const VerifyContext& vc) {
    SkeletonConfig cfg{n, k};
    cfg.validate();
    requireDyadicDelta(delta);
    GridSpec dom = makeCenteredDomain(n, delta, 7);
    GridSpec eval = makeUnitDomain(n, delta);
    Rng rng(seed);
    auto qs = detail::radiiInRange(1.0, 2.0, delta, false);
    int failures = 0, checked = 0;
    double worstMargin = 1e300;
    for (int it = 0; it < trials; ++it) {
        RadiusFunction rho;
        rho.grid = eval;
        rho.radii.resize(static_cast<std::size_t>(eval.cellCount()));
        for (auto& r : rho.radii) r = delta * static_cast<double>(qs[rng.below(qs.size())]);
        std::vector<Skeleton> sk(rho.radii.size());
        for (std::int64_t f = 0; f < eval.cellCount(); ++f) {
            sk[static_cast<std::size_t>(f)] = {eval.cellCenter(eval.unflatten(f)),
                                               rho.radii[static_cast<std::size_t>(f)]};
        }
        FaceAssignment phi{cfg, greedySelect(cfg, sk, delta / 2.0).faces};
        PlaneClassPartition part = planeClassPartition(phi);
        ScalarField f = makeField(dom);
        for (double& v : f.values) v = rng.uniform();
        std::size_t cls = static_cast<std::size_t>(it) % part.members.size();
        if (part.members[cls].empty()) continue;
        WeightVector w =
            randomBoundaryWeights(part.members[cls].size(), delta, n, k, p / (p - 1.0), rng);
        DualityReport rep = dualityCheck(f, rho, phi, cls, w, delta, p, 1.01, vc.workers);
        ++checked;
        if (!(rep.pass && rep.chainOk)) ++failures;
        if (rep.K * rep.fNorm > 0.0)
            worstMargin = std::min(worstMargin, rep.K * rep.fNorm * 1.01 - rep.left);
    }
    json j;
    j["trials"] = checked;
    j["failures"] = failures;
    j["worstMargin"] = worstMargin;
    return finishVerify("duality", failures == 0 && checked > 0, j, vc);
}

int verifyIntersections(int n, int k, const std::string& deltas, std::uint64_t seed,
                        const VerifyContext& vc) {
    SkeletonConfig cfg{n, k};
    cfg.validate();
    auto ds = parseDeltas(deltas);
    if (ds.size() < 2) throw ConfigError("need at least two scales");
    Rng root(seed);
    json perM = json::array();
    bool pass = true;
    for (int m : {2, 3}) {
        std::vector<double> cstars;
        bool holderAll = true;
        json rows = json::array();
        for (double delta : ds) {
            requireDyadicDelta(delta);
            GridSpec eval = makeUnitDomain(n, delta);
            Rng rng = root.split(static_cast<std::uint64_t>(m * 1000) ^
                                 static_cast<std::uint64_t>(std::llround(1.0 / delta)));
            auto qs = detail::radiiInRange(1.0, 2.0, delta, false);
            RadiusFunction rho;
            rho.grid = eval;
            rho.radii.resize(static_cast<std::size_t>(eval.cellCount()));
            for (auto& r : rho.radii) r = delta * static_cast<double>(qs[rng.below(qs.size())]);
            std::vector<Skeleton> sk(rho.radii.size());
            for (std::int64_t f = 0; f < eval.cellCount(); ++f)
                sk[static_cast<std::size_t>(f)] = {eval.cellCenter(eval.unflatten(f)),
                                                   rho.radii[static_cast<std::size_t>(f)]};
            SelectionResult sel = greedySelect(cfg, sk, delta / 2.0);
            FaceAssignment phi{cfg, sel.faces};
            PlaneClassPartition part = planeClassPartition(phi);
            // largest class; the duality argument's u is the full class size
            std::size_t cls = 0;
            for (std::size_t c = 1; c < part.members.size(); ++c)
                if (part.members[c].size() > part.members[cls].size()) cls = c;
            std::vector<SelectedFace> family;
            for (std::int64_t mem : part.members[cls])
                family.push_back({sk[static_cast<std::size_t>(mem)],
                                  phi.faces[static_cast<std::size_t>(mem)]});
            WeightVector w = randomBoundaryWeights(family.size(), delta, n, k,
                                                   static_cast<double>(m), rng);
            IntersectionReport rep = intersectionBoundCheck(cfg, family, w, delta, m);
            holderAll = holderAll && rep.holderOk;
            cstars.push_back(rep.cStar);
            rows.push_back({{"delta", delta},
                            {"u", rep.u},
                            {"I", rep.I},
                            {"cStar", rep.cStar},
                            {"holderOk", rep.holderOk},
                            {"maxTuplesPerFirst", rep.maxTuplesPerFirst},
                            {"tupleCountPower", rep.tupleCountPower}});
        }
        double mx = *std::max_element(cstars.begin(), cstars.end());
        double mn = *std::min_element(cstars.begin(), cstars.end());
        bool stable = mn > 0.0 && mx / mn <= 3.0;
        pass = pass && stable && holderAll;
        perM.push_back({{"m", m},
                        {"rows", rows},
                        {"cStarMaxOverMin", mn > 0.0 ? mx / mn : -1.0},
                        {"stable", stable},
                        {"holderAll", holderAll}});
    }
    json detail;
    detail["perM"] = perM;
    return finishVerify("intersections", pass, detail, vc);
}

int verifyUpperBound(int n, int k, double p, const std::string& deltas,
                     const std::string& variant, std::uint64_t seed, const VerifyContext& vc) {
    SkeletonConfig cfg{n, k};
    cfg.validate();
    auto ds = parseDeltas(deltas);
    for (double d : ds) requireDyadicDelta(d);
    PoolOptions pool;
    pool.searchOpt.strategy = "coordinate-align";
    pool.searchOpt.restarts = 2;
    UpperBoundReport rep = upperBoundScan(cfg, p, ds, parseVariant(variant), seed, pool,
                                          vc.workers);
    double ceiling = static_cast<double>(n - k) / (2.0 * n * p) + 0.05;
    double slopeMag = std::abs(rep.scan.fit.slope);
    bool slopeOk = slopeMag <= ceiling;
    json j;
    j["cStarPerDelta"] = json::array();
    for (const auto& [d, c] : rep.cStarPerDelta)
        j["cStarPerDelta"].push_back({{"delta", d}, {"cStar", c}});
    j["maxOverMin"] = rep.maxOverMin;
    j["fittedSlope"] = rep.scan.fit.slope;
    j["slopeCeiling"] = ceiling;
    return finishVerify("upper-bound", rep.bounded && slopeOk, j, vc);
}

int verifyMainLemma(int n, int ell, int maxX, const std::string& radiusDomain,
                    const VerifyContext& vc) {
    if (ell < 1 || ell > n) throw ConfigError("need 1 <= ell <= n");
    std::vector<std::int64_t> radii;
    {
        std::stringstream ss(radiusDomain);
        std::string tok;
        while (std::getline(ss, tok, ',')) radii.push_back(std::stoll(tok));
    }
    if (radii.empty()) throw ConfigError("empty radius domain");

    // small center configurations: a grid, a line, and square corners +
    // center, trimmed to maxX
    std::vector<std::pair<std::string, std::vector<IntPoint>>> configs;
    {
        std::vector<IntPoint> grid;
        for (int a = 0; a <= 1; ++a)
            for (int b = 0; b <= 2; ++b) grid.push_back(IntPoint{{a, b}});
        configs.push_back({"grid2x3", grid});
        std::vector<IntPoint> line;
        for (int a = 0; a < 4; ++a) line.push_back(IntPoint{{a, 0}});
        configs.push_back({"line4", line});
        std::vector<IntPoint> sq = {{{0, 0}}, {{4, 0}}, {{0, 4}}, {{4, 4}}, {{2, 2}}};
        configs.push_back({"square4+center", sq});
    }

    std::filesystem::create_directories(vc.outDir);
    std::string csvPath = vc.outDir + "/main_lemma_ratios.csv";
    std::ofstream out(csvPath);
    out << "config,u,minRatio,assignments\n";
    bool pass = true;
    json rows = json::array();
    for (auto& [name, X] : configs) {
        if (static_cast<int>(X.size()) > maxX) X.resize(static_cast<std::size_t>(maxX));
        BruteForceResult res = mainLemmaBruteForce(n, ell, X, radii);
        out << name << ',' << X.size() << ',' << fmtDouble(res.minRatio) << ','
            << res.assignmentsTried << '\n';
        rows.push_back({{"config", name}, {"u", X.size()}, {"minRatio", res.minRatio}});
        if (!(res.minRatio > 0.0)) pass = false;
    }
    out.close();

    // the checker must reject a hand-built violating instance
    bool rejected = false;
    try {
        std::vector<IntPoint> X = {{{0, 0}}};
        std::set<IntPoint> A = {{{1}}};
        mainLemmaRatio(n, ell, X, A);
    } catch (const Error& e) {
        rejected = e.code() == "hypothesis-violated";
    }
    pass = pass && rejected;

    json j;
    j["rows"] = rows;
    j["violatingInstanceRejected"] = rejected;
    j["ratioTable"] = csvPath;
    if (vc.outputs) (*vc.outputs)["main_lemma_ratios"] = csvPath;
    return finishVerify("main-lemma", pass, j, vc);
}

// ---- run (config-driven pipeline) --------------------------------------------

int cmdRun(const std::string& configPath, Timings& tm) {
    std::ifstream in(configPath);
    if (!in) throw ConfigError("cannot open config: " + configPath);
    json cfg = json::parse(in, nullptr, false);
    if (cfg.is_discarded()) throw ConfigError("config is not valid JSON");

    const int n = cfg.value("n", 2);
    const int k = cfg.value("k", 1);
    const double p = cfg.value("p", 1.0);
    if (n < 1 || n > kMaxDim) throw ConfigError("n out of range");
    if (k < 0 || k >= n) throw ConfigError("k out of range");

    std::vector<double> deltas;
    if (cfg.contains("deltas")) {
        if (cfg["deltas"].is_string())
            deltas = parseDeltas(cfg["deltas"].get<std::string>());
        else
            for (const auto& d : cfg["deltas"])
                deltas.push_back(d.is_string() ? parseDelta(d.get<std::string>())
                                               : d.get<double>());
    } else {
        deltas = {1.0 / 16.0};
    }
    if (deltas.empty()) throw ConfigError("empty delta list");
    std::int64_t capMiB = cfg.value("memoryCapMiB", static_cast<std::int64_t>(2048));
    for (double d : deltas) {
        requireDyadicDelta(d);
        requireMemory(n, d, capMiB);
    }
    double minDelta = *std::min_element(deltas.begin(), deltas.end());

    const std::uint64_t seed = cfg.value("seed", static_cast<std::uint64_t>(1));
    const int workers = cfg.value("workers", 0);
    const std::string outDir = cfg.value("outputDir", std::string("out"));
    const std::string variant = cfg.value("variant", std::string("restricted"));
    std::filesystem::create_directories(outDir);

    std::vector<std::string> pipeline =
        cfg.value("pipeline", std::vector<std::string>{"witness", "eval"});
    json outputs;
    int worstExit = 0;

    for (const std::string& step : pipeline) {
        if (step == "witness") {
            WitnessArgs wa;
            wa.n = n;
            wa.k = k;
            wa.delta = minDelta;
            wa.strategy = cfg.value("strategy", std::string("coordinate-align"));
            wa.seed = seed;
            wa.restarts = cfg.value("restarts", 2);
            wa.annealMoves = cfg.value("annealMoves", static_cast<std::int64_t>(0));
            wa.outDir = outDir;
            tm.time("witness", [&] { cmdWitness(wa, tm, &outputs); });
        } else if (step == "eval") {
            EvalArgs ea;
            ea.n = n;
            ea.k = k;
            ea.variant = variant == "linearized" ? "restricted" : variant;
            ea.workers = workers;
            if (cfg.contains("inputField")) {
                ea.input = cfg["inputField"].get<std::string>();
            } else if (outputs.contains("witness_occupancy")) {
                ea.input = outputs["witness_occupancy"].get<std::string>();
            } else {
                GridSpec dom = makeCenteredDomain(n, minDelta, 7);
                std::string path = outDir + "/input_constant.bin";
                writeField(makeField(dom, 1.0), path);
                ea.input = path;
                outputs["input_constant"] = path;
            }
            ea.output = outDir + "/eval_output.bin";
            tm.time("eval", [&] { cmdEval(ea); });
            outputs["eval_output"] = ea.output;
        } else if (step == "norm-scan") {
            ScanArgs sa;
            sa.n = n;
            sa.k = k;
            sa.p = p;
            sa.variant = variant == "linearized" ? "restricted" : variant;
            sa.seed = seed;
            sa.strategy = cfg.value("strategy", std::string("coordinate-align"));
            sa.restarts = cfg.value("restarts", 2);
            sa.outDir = outDir;
            sa.workers = workers;
            sa.memoryCapMiB = capMiB;
            if (cfg.contains("candidates")) {
                std::string cand;
                for (const auto& c : cfg["candidates"]) cand += c.get<std::string>() + ",";
                sa.candidates = cand;
            }
            std::string toks;
            for (double d : deltas) {
                if (!toks.empty()) toks += ',';
                toks += fmtDouble(d);
            }
            sa.deltas = toks;
            cmdNormScan(sa, tm, &outputs);
        } else if (step == "verify") {
            VerifyContext vc{outDir, &outputs, workers};
            std::vector<std::string> checks =
                cfg.value("verify", std::vector<std::string>{"domination"});
            for (const std::string& c : checks) {
                int rc = 0;
                if (c == "domination")
                    rc = verifyDomination(n, k, minDelta, cfg.value("trials", 5), seed, vc);
                else if (c == "rescaling")
                    rc = verifyRescaling(n, k, minDelta, cfg.value("trials", 2), seed, vc);
                else if (c == "duality")
                    rc = verifyDuality(n, k, minDelta, p > 1.0 ? p : 2.0,
                                       cfg.value("trials", 10), seed, vc);
                else if (c == "intersections")
                    rc = verifyIntersections(n, k, "2^-4..2^-6", seed, vc);
                else if (c == "upper-bound")
                    rc = verifyUpperBound(n, k, p, "2^-3..2^-5", variant, seed, vc);
                else if (c == "main-lemma")
                    rc = verifyMainLemma(n, std::max(1, n - k), 6, "1,2,3,4", vc);
                else
                    throw ConfigError("unknown verify check: " + c);
                worstExit = std::max(worstExit, rc);
            }
        } else {
            throw ConfigError("unknown pipeline step: " + step);
        }
    }

    // manifest: config hash, code version, outputs, artifact hashes, timings
    json manifest;
    {
        std::string canon = cfg.dump();
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a(canon.data(), canon.size())));
        manifest["configHash"] = buf;
    }
    manifest["codeVersion"] = kVersion;
    manifest["outputs"] = outputs;
    json hashes;
    for (const auto& [key, path] : outputs.items())
        hashes[key] = hashFile(path.get<std::string>());
    manifest["artifactHashes"] = hashes;
    json tms;
    for (const auto& [name, ms] : tm.ms) tms[name] = ms;
    manifest["timingsMs"] = tms;
    manifest["summary"] = {{"pass", worstExit == 0}};
    writeJson(manifest, outDir + "/run_manifest.json");
    std::cout << "run: manifest written to " << outDir << "/run_manifest.json"
              << (worstExit == 0 ? " (all pass)" : " (with failures)") << "\n";
    return worstExit;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"discretized k-skeleton maximal operator lab"};
    app.require_subcommand(1);

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "evaluate an operator variant on a field");
    eval->add_option("--n", ea.n, "dimension");
    eval->add_option("--k", ea.k, "face dimension");
    eval->add_option("--delta", ea.delta, "operator width (default: field spacing)");
    eval->add_option("--variant", ea.variant,
                     "restricted | dyadic:t | unrestricted | linearized");
    eval->add_option("--input", ea.input, "input field file")->required();
    eval->add_option("--output", ea.output, "output field file")->required();
    eval->add_option("--rho-file", ea.rhoFile, "radius function csv (linearized)");
    eval->add_option("--phi-file", ea.phiFile, "face assignment csv (linearized)");
    eval->add_option("--argmax-output", ea.argmaxOutput, "write argmax radii as csv");
    eval->add_option("--workers", ea.workers, "worker threads (0 = auto)");

    WitnessArgs wa;
    auto* wit = app.add_subcommand("witness", "search for a small skeleton-union witness");
    wit->add_option("--n", wa.n, "dimension");
    wit->add_option("--k", wa.k, "face dimension");
    wit->add_option("--delta", wa.delta, "grid spacing");
    wit->add_option("--strategy", wa.strategy, "random-restart | coordinate-align | anneal");
    wit->add_option("--seed", wa.seed, "rng seed");
    wit->add_option("--restarts", wa.restarts, "independent restarts");
    wit->add_option("--anneal-moves", wa.annealMoves, "anneal move budget (0 = auto)");
    wit->add_option("--out-dir", wa.outDir, "output directory");

    SelectArgs sa;
    auto* sel = app.add_subcommand("select", "greedy face selection with certificate");
    sel->add_option("--n", sa.n, "dimension");
    sel->add_option("--k", sa.k, "face dimension");
    sel->add_option("--delta", sa.delta, "grid quantum base for plane keys");
    sel->add_option("--input", sa.input, "skeleton csv")->required();
    sel->add_option("--out-assignment", sa.outAssignment, "assignment csv");
    sel->add_option("--out-certificate", sa.outCertificate, "certificate json");

    ScanArgs na;
    auto* scan = app.add_subcommand("norm-scan", "operator-norm lower-bound scan");
    scan->add_option("--n", na.n, "dimension");
    scan->add_option("--k", na.k, "face dimension");
    scan->add_option("--p", na.p, "Lebesgue exponent");
    scan->add_option("--deltas", na.deltas, "e.g. 2^-4..2^-8 or comma list");
    scan->add_option("--variant", na.variant, "restricted | dyadic:t | unrestricted");
    scan->add_option("--candidates", na.candidates, "comma list of candidate classes");
    scan->add_option("--seed", na.seed, "rng seed");
    scan->add_option("--strategy", na.strategy, "witness search strategy");
    scan->add_option("--restarts", na.restarts, "witness restarts");
    scan->add_option("--anneal-moves", na.annealMoves, "anneal move budget");
    scan->add_option("--out-dir", na.outDir, "output directory");
    scan->add_option("--workers", na.workers, "worker threads");
    scan->add_option("--memory-cap-mib", na.memoryCapMiB, "memory cap in MiB");

    std::vector<std::string> boxdimInputs;
    std::string boxdimOut;
    auto* bd = app.add_subcommand("boxdim", "box dimension from occupancy files");
    bd->add_option("--inputs", boxdimInputs, "occupancy field files")->required();
    bd->add_option("--out", boxdimOut, "output json");

    auto* ver = app.add_subcommand("verify", "numerical verification checks");
    ver->require_subcommand(1);
    struct {
        int n = 2, k = 1;
        double delta = 1.0 / 32.0;
        double p = 2.0;
        int trials = 20;
        std::uint64_t seed = 1;
        std::string deltas = "2^-4..2^-7";
        std::string variant = "restricted";
        int ell = 1, maxX = 6;
        std::string radiusDomain = "1,2,3,4";
        std::string outDir = ".";
        int workers = 0;
    } va;
    for (const char* name : {"duality", "intersections", "upper-bound", "main-lemma",
                             "domination", "rescaling"}) {
        auto* sub = ver->add_subcommand(name, name);
        sub->add_option("--n", va.n, "dimension");
        sub->add_option("--k", va.k, "face dimension");
        sub->add_option("--delta", va.delta, "grid spacing");
        sub->add_option("--p", va.p, "Lebesgue exponent");
        sub->add_option("--trials", va.trials, "number of random trials");
        sub->add_option("--seed", va.seed, "rng seed");
        sub->add_option("--deltas", va.deltas, "scale list for scans");
        sub->add_option("--variant", va.variant, "operator variant");
        sub->add_option("--ell", va.ell, "main-lemma ell");
        sub->add_option("--max-x", va.maxX, "main-lemma max |X|");
        sub->add_option("--radius-domain", va.radiusDomain, "main-lemma radii (comma list)");
        sub->add_option("--out-dir", va.outDir, "output directory");
        sub->add_option("--workers", va.workers, "worker threads");
    }

    std::string configPath;
    auto* run = app.add_subcommand("run", "config-driven experiment pipeline");
    run->add_option("--config", configPath, "json config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Timings tm;
    try {
        if (eval->parsed()) return cmdEval(ea);
        if (wit->parsed()) return cmdWitness(wa, tm);
        if (sel->parsed()) return cmdSelect(sa);
        if (scan->parsed()) return cmdNormScan(na, tm);
        if (bd->parsed()) return cmdBoxDim(boxdimInputs, boxdimOut);
        if (ver->parsed()) {
            VerifyContext vc{va.outDir, nullptr, va.workers};
            auto* sub = ver->get_subcommands().front();
            const std::string what = sub->get_name();
            if (what == "domination")
                return verifyDomination(va.n, va.k, va.delta, va.trials, va.seed, vc);
            if (what == "rescaling")
                return verifyRescaling(va.n, va.k, va.delta, va.trials, va.seed, vc);
            if (what == "duality")
                return verifyDuality(va.n, va.k, va.delta, va.p, va.trials, va.seed, vc);
            if (what == "intersections")
                return verifyIntersections(va.n, va.k, va.deltas, va.seed, vc);
            if (what == "upper-bound")
                return verifyUpperBound(va.n, va.k, va.p, va.deltas, va.variant, va.seed, vc);
            if (what == "main-lemma")
                return verifyMainLemma(va.n, va.ell, va.maxX, va.radiusDomain, vc);
        }
        if (run->parsed()) return cmdRun(configPath, tm);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ResourceError& e) {
        std::cerr << "resource rejection: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
