// Acceptance harness: one pass/fail line per criterion, exit 0 iff every
// requested criterion passes. Tolerances and runtime budgets are pinned here.

#include "qbirkhoff/birkhoff.hpp"
#include "qbirkhoff/confluence.hpp"
#include "qbirkhoff/description.hpp"
#include "qbirkhoff/error.hpp"
#include "qbirkhoff/qpvi.hpp"
#include "qbirkhoff/qsystem.hpp"
#include "qbirkhoff/rng.hpp"
#include "qbirkhoff/theta.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace qb;

namespace {

struct Result {
    bool pass = false;
    std::string note;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---- scaled comparisons ------------------------------------------------------

double scRel(const ScaledComplex& a, const ScaledComplex& b) {
    if (b.isZero()) return a.isZero() ? 0.0 : 1.0;
    const cplx r = (a.m / b.m) * std::exp(cplx(a.logs - b.logs, 0.0));
    return std::abs(r - 1.0);
}

double scmRel(ScaledCMatrix a, ScaledCMatrix b) {
    a.normalize();
    b.normalize();
    return relDiff(a.m * cplx(std::exp(a.logScale - b.logScale), 0.0), b.m);
}

double scmScalarRel(ScaledCMatrix a, const ScaledComplex& b) {
    a.normalize();
    ScaledComplex as;
    as.m = a.m(0, 0);
    as.logs = a.logScale;
    return scRel(as, b);
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// ---- CLI spawning ------------------------------------------------------------

std::string cliPath() {
    const char* p = std::getenv("QBIRKHOFF_CLI");
    return p ? p : "./build/qbirkhoff";
}

std::string dataPath(const std::string& name) {
    const char* d = std::getenv("QBIRKHOFF_DATA");
    return (d ? std::string(d) : std::string("data")) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct Spawn {
    int exitCode = -1;
    std::string out;
    std::string err;
};

Spawn spawn(const std::string& args, const std::string& envPrefix = "") {
    static int counter = 0;
    const std::string tag = std::to_string(++counter);
    const std::string outFile = "/tmp/qbirkhoff_acc_" + tag + ".out";
    const std::string errFile = "/tmp/qbirkhoff_acc_" + tag + ".err";
    const std::string cmd =
        envPrefix + cliPath() + " " + args + " > " + outFile + " 2> " + errFile;
    const int status = std::system(cmd.c_str());
    Spawn s;
    s.exitCode = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    s.out = slurp(outFile);
    s.err = slurp(errFile);
    std::remove(outFile.c_str());
    std::remove(errFile.c_str());
    return s;
}

// ---- shared instances ----------------------------------------------------------

JimboSakaiInstance loadJS(const std::string& file) {
    return instantiate_jimbo_sakai(load_description(dataPath(file)));
}

std::vector<cplx> jsProbes(const JimboSakaiInstance& inst, int n) {
    ProbeSampler smp(505);
    std::vector<cplx> probes;
    for (int i = 0; i < n; ++i)
        probes.push_back(smp.annulusPointAvoiding(inst.ctx, inst.probeAvoidSet(), 1e-3, 0.8, 1.6));
    return probes;
}

std::vector<double> epsGrid7() {
    std::vector<double> g;
    for (int k = 1; k <= 7; ++k) g.push_back(std::pow(2.0, -k));
    return g;
}

// ---- criterion 1: theta series vs triple product ------------------------------

Result criterion1() {
    const double tol = 1e-12;
    ProbeSampler smp(909);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double r = smp.uniform(0.05, 2.5);
        const double ang = smp.uniform(-0.35, 0.35);
        const QContext ctx(std::exp(cplx(r * std::cos(ang), r * std::sin(ang))));
        SpiralSet zeros;
        zeros.add(cplx(-1.0));
        const cplx z = smp.annulusPointAvoiding(ctx, zeros, 0.05, 0.4, 2.5);
        worst = std::max(worst, scRel(theta_scaled(ctx, z), theta_product_scaled(ctx, z)));
    }
    return {worst <= tol, fmt("1000 random (q, z), worst rel %.2e, tol %.0e", worst, tol)};
}

// ---- criterion 2: functional equations -----------------------------------------

Result criterion2() {
    const double tol = 1e-10;
    const QContext ctx(2.0, 1.0);
    const cplx a{1.7, -0.6};
    const CMatrix Bdiag(2, 2, {cplx(1.5), cplx(0.4), cplx(0.2), cplx(0.9)});
    const CMatrix Bjordan(2, 2, {cplx(1.5), cplx(1.0), cplx(0.0), cplx(1.5)});
    const CharacterPart chD = make_character(Bdiag);
    const CharacterPart chJ = make_character(Bjordan);

    SpiralSet avoid;
    avoid.add(cplx(-1.0));
    avoid.add(-a);
    avoid.merge(character_pole_spirals(chD));
    avoid.merge(character_pole_spirals(chJ));

    ProbeSampler smp(707);
    double wTheta = 0.0, wLambda = 0.0, wLq = 0.0, wMat = 0.0;
    for (int i = 0; i < 100; ++i) {
        const cplx z = smp.annulusPointAvoiding(ctx, avoid, 1e-2, 0.5, 2.0);

        ScaledComplex tq = theta_scaled(ctx, ctx.q * z);
        ScaledComplex tz = theta_scaled(ctx, z);
        tz *= z;
        wTheta = std::max(wTheta, scRel(tq, tz));

        ScaledComplex lq = lambda_char_scaled(ctx, a, ctx.q * z);
        ScaledComplex lz = lambda_char_scaled(ctx, a, z);
        lz *= a;
        wLambda = std::max(wLambda, scRel(lq, lz));

        wLq = std::max(wLq, std::abs(lq_eval(ctx, ctx.q * z) - lq_eval(ctx, z) - 1.0) /
                                std::max(1.0, std::abs(lq_eval(ctx, z))));

        for (const auto* pair : {&chD, &chJ}) {
            const CMatrix& B = (pair == &chD) ? Bdiag : Bjordan;
            ScaledCMatrix lhs = matrix_char_eval(ctx, *pair, ctx.q * z);
            ScaledCMatrix v = matrix_char_eval(ctx, *pair, z);
            wMat = std::max(wMat, scmRel(lhs, ScaledCMatrix{B * v.m, v.logScale}));
            wMat = std::max(wMat, scmRel(lhs, ScaledCMatrix{v.m * B, v.logScale}));
        }
    }
    const double worst = std::max({wTheta, wLambda, wLq, wMat});
    return {worst <= tol,
            fmt("100 probes: theta %.1e, character %.1e, q-log %.1e, matrix %.1e, tol %.0e",
                wTheta, wLambda, wLq, wMat, tol)};
}

// ---- criterion 3: rank-1 end-to-end vs closed forms ------------------------------

Result criterion3() {
    const double tol = 1e-9;
    const QContext ctx(2.0, 1.0);
    const cplx alphas[] = {{1.0, 0.5}, {0.7, -0.3}, {-0.4, 1.2}, {2.3, 0.1}, {0.35, 0.6}};
    double worst = 0.0;
    ProbeSampler smp(313);
    for (cplx alpha : alphas) {
        RationalQSystem sys = RationalQSystem::fromSigmaP(
            ctx, CRationalFunction(CPolynomial({-alpha, cplx(1.0)}), CPolynomial({cplx(1.0)})),
            RationalMatrix::identity(1));
        const LocalSolution y0 = local_series(sys, Side::Origin);
        const LocalSolution yi = local_series(sys, Side::Infinity);
        const ConnectionData conn = make_connection(sys);
        SpiralSet avoid = y0.poleRegistry;
        avoid.merge(yi.poleRegistry);
        avoid.merge(conn.registry);
        avoid.add(cplx(-1.0));
        avoid.add(-alpha);
        avoid.add(alpha);
        for (int i = 0; i < 100; ++i) {
            const cplx z = smp.annulusPointAvoiding(ctx, avoid, 2e-2, 0.3, 3.0);
            worst = std::max(worst, scmScalarRel(eval_solution(sys, y0, z),
                                                 scalar_y0(ctx, alpha, z)));
            worst = std::max(worst, scmScalarRel(eval_solution(sys, yi, z),
                                                 scalar_yinf(ctx, alpha, z)));
            worst = std::max(worst, rel(connection_eval(sys, conn, z)(0, 0),
                                        scalar_connection(ctx, alpha, z).value()));
        }
    }
    return {worst <= tol,
            fmt("5 alphas x 100 probes x {y0, yinf, P}, worst rel %.2e, tol %.0e", worst, tol)};
}

// ---- criterion 4: ellipticity ----------------------------------------------------

Result criterion4() {
    const double tol = 1e-8;
    double worst = 0.0;
    for (const char* file : {"jimbo-sakai-generic.json", "jimbo-sakai-degenerate.json"}) {
        const JimboSakaiInstance inst = loadJS(file);
        worst = std::max(worst, ellipticity_residual(*inst.sysQ, inst.connQ, 1.0, 200, 2468));
        worst = std::max(worst, ellipticity_residual(*inst.sysP, inst.connP, 1.0, 200, 2468));
    }
    return {worst <= tol,
            fmt("full+stripped on both instances, 200 probes, worst %.2e, tol %.0e", worst, tol)};
}

// ---- criterion 5: comparison identity + negative controls -------------------------

Result criterion5() {
    const double tol = 1e-8;
    const double controlBar = 1e-2;
    const JimboSakaiInstance gen = loadJS("jimbo-sakai-generic.json");
    const JimboSakaiInstance deg = loadJS("jimbo-sakai-degenerate.json");
    const std::vector<cplx> pGen = jsProbes(gen, 100);
    const std::vector<cplx> pDeg = jsProbes(deg, 100);

    const double cleanGen = comparison_residual(gen, pGen);
    const double cleanDeg = comparison_residual(deg, pDeg);
    bool ok = cleanGen <= tol && cleanDeg <= tol;

    const ComparisonCorruption all[] = {
        ComparisonCorruption::DropQPower,          ComparisonCorruption::AltQPowerMinus3,
        ComparisonCorruption::DropA2Square,        ComparisonCorruption::DropLambdaB0Inverse,
        ComparisonCorruption::DropLambdaTB0,       ComparisonCorruption::ThetaNumOnce,
        ComparisonCorruption::ThetaDenWrongArg};
    double minCtrl = 1e300;
    for (ComparisonCorruption c : all)
        minCtrl = std::min(minCtrl, comparison_residual(gen, pGen, c));
    // on the degenerate instance the C^2 and Lambda_{B0} factors are the
    // identity, so only the corruptions that touch a live factor can move it
    const ComparisonCorruption live[] = {
        ComparisonCorruption::DropQPower, ComparisonCorruption::AltQPowerMinus3,
        ComparisonCorruption::DropLambdaTB0, ComparisonCorruption::ThetaNumOnce,
        ComparisonCorruption::ThetaDenWrongArg};
    for (ComparisonCorruption c : live)
        minCtrl = std::min(minCtrl, comparison_residual(deg, pDeg, c));
    ok = ok && minCtrl > controlBar;
    return {ok, fmt("clean residual %.2e/%.2e (tol %.0e); weakest control %.2e (> %.0e)",
                    cleanGen, cleanDeg, tol, minCtrl, controlBar)};
}

// ---- criterion 6: criterion booleans agree -----------------------------------------

Result criterion6() {
    const QContext ctx(2.0, 1.0);
    ProbeSampler smp(606);
    std::vector<cplx> probes;
    for (int i = 0; i < 6; ++i) probes.push_back(smp.annulusPoint(0.9, 1.7));

    const SystemDescription gen = load_description(dataPath("jimbo-sakai-generic.json"));
    const SystemDescription deg = load_description(dataPath("jimbo-sakai-degenerate.json"));

    struct Case {
        const SystemDescription* d;
        cplx t;
        bool expect;
    };
    const Case cases[] = {
        {&deg, deg.t, true},        // shipped degenerate instance
        {&gen, gen.t, false},       // shipped generic instance
        {&gen, cplx(0.0, 0.7), false}, // non-isomonodromic negatives
        {&gen, cplx(0.0, 1.0), false},
    };
    bool ok = true;
    std::string detail;
    for (const Case& c : cases) {
        const CriterionReport r =
            criterion_check(ctx, c.d->calA0, c.d->calA1, c.d->calAt, c.t, probes);
        ok = ok && r.qPseudoConstant == r.pCriterion && r.qPseudoConstant == c.expect;
        detail += fmt(" %d/%d", int(r.qPseudoConstant), int(r.pCriterion));
    }
    return {ok, "q/p booleans over 4 instances:" + detail + " (expected 1/1 0/0 0/0 0/0)"};
}

// ---- criterion 7: confluence increments and sector consistency ----------------------

Result criterion7() {
    const ConfluenceFamily fam =
        instantiate_confluence(load_description(dataPath("confluence-fuchsian.json")));
    const SectorPartition part = sector_partition(fam.odePoles);
    const SweepResult sw = epsilon_sweep(fam, part, epsGrid7());

    bool monotone = true;
    for (std::size_t p = 0; p < sw.probes.size(); ++p)
        for (std::size_t e = 2; e < sw.epsGrid.size(); ++e)
            monotone = monotone && sw.increment[e][p] < sw.increment[e - 1][p];

    bool sectorsAgree = true;
    double worstGap = 0.0, worstBar = 0.0;
    for (std::size_t j = 0; 2 * j + 1 < sw.probes.size(); ++j) {
        const double gap = relDiff(sw.sectorLimit[2 * j], sw.sectorLimit[2 * j + 1]);
        const double bars = sw.errorBar[2 * j] + sw.errorBar[2 * j + 1];
        if (gap > worstGap) {
            worstGap = gap;
            worstBar = bars;
        }
        sectorsAgree = sectorsAgree && gap <= bars;
    }
    const bool ok = monotone && sectorsAgree && sw.probes.size() == 2 * part.sectorCount();
    return {ok, fmt("eps 2^-1..2^-7, %zu probes: increments %s; worst same-sector gap "
                    "%.1e within bars %.1e",
                    sw.probes.size(), monotone ? "decreasing for k >= 2" : "NOT monotone",
                    worstGap, worstBar)};
}

// ---- criterion 8: sector-limit jumps vs ODE monodromy --------------------------------

Result criterion8() {
    const ConfluenceFamily fam =
        instantiate_confluence(load_description(dataPath("confluence-fuchsian.json")));
    const CrossingReport rep = crossing_check(fam, epsGrid7());
    bool ok = rep.crossings.size() == fam.odePoles.size();
    double worstRes = 0.0, worstBound = 0.0, worstDet = 0.0;
    for (const auto& c : rep.crossings) {
        const double bound = std::max(1e-3, 3.0 * c.errorBar);
        ok = ok && c.residual <= bound && c.oracleDetResidual <= 1e-8;
        if (c.residual > worstRes) {
            worstRes = c.residual;
            worstBound = bound;
        }
        worstDet = std::max(worstDet, c.oracleDetResidual);
    }
    return {ok, fmt("%zu crossings: worst residual %.2e <= max(1e-3, 3*bar) = %.2e; "
                    "det self-check %.1e (tol 1e-8)",
                    rep.crossings.size(), worstRes, worstBound, worstDet)};
}

// ---- criterion 9: hypothesis guards ---------------------------------------------------

Result criterion9() {
    struct Guard {
        const char* cmd;
        const char* file;
        const char* needle;
    };
    const Guard guards[] = {
        {"connection", "resonant.json", "resonant pair"},
        {"solve", "pole-at-zero.json", "analytic at z = 0"},
        {"deform", "bad-rfamily.json", "not an integer power of q"},
    };
    bool ok = true;
    std::string detail;
    for (const Guard& g : guards) {
        const Spawn s = spawn(std::string(g.cmd) + " " + dataPath(g.file));
        const bool named = s.err.find(g.needle) != std::string::npos;
        ok = ok && s.exitCode == 3 && named;
        detail += fmt(" %s:rc=%d,%s", g.file, s.exitCode, named ? "named" : "UNNAMED");
    }
    return {ok, "exit codes and named hypotheses:" + detail};
}

// ---- criterion 10: determinism --------------------------------------------------------

Result criterion10() {
    const std::string examples[] = {
        "solve " + dataPath("theta-1x1.json"),
        "solve " + dataPath("rank1-alpha.json"),
        "connection " + dataPath("theta-1x1.json"),
        "connection " + dataPath("rank1-alpha.json"),
        "deform " + dataPath("isomono-scalar.json"),
        "qpvi-verify " + dataPath("jimbo-sakai-degenerate.json"),
        "qpvi-verify --negative-control " + dataPath("jimbo-sakai-generic.json"),
        "confluence " + dataPath("confluence-scalar.json"),
        "confluence " + dataPath("confluence-fuchsian.json"),
    };
    bool ok = true;
    int checked = 0;
    for (const std::string& ex : examples) {
        const Spawn a = spawn(ex);
        const Spawn b = spawn(ex);
        ok = ok && a.exitCode == 0 && b.exitCode == 0 && !a.out.empty() && a.out == b.out;
        ++checked;
    }
    // a different thread budget must not change a single byte
    const Spawn t1 = spawn(examples[3], "QBIRKHOFF_THREADS=1 ");
    const Spawn t3 = spawn(examples[3], "QBIRKHOFF_THREADS=3 ");
    ok = ok && t1.exitCode == 0 && t1.out == t3.out;
    return {ok, fmt("%d examples run twice byte-identically; thread budget 1 vs 3 identical",
                    checked)};
}

} // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* what;
        double budgetSec;
        std::function<Result()> run;
    };
    const Criterion criteria[] = {
        {1, "theta series and triple product agree", 2, criterion1},
        {2, "theta/character/q-log functional equations", 1, criterion2},
        {3, "rank-1 solver matches the closed forms", 5, criterion3},
        {4, "connection matrices are elliptic", 30, criterion4},
        {5, "comparison identity with negative controls", 60, criterion5},
        {6, "pseudo-constancy criterion booleans agree", 60, criterion6},
        {7, "confluence increments shrink, sectors consistent", 300, criterion7},
        {8, "sector-limit jumps match the ODE monodromy", 300, criterion8},
        {9, "hypothesis guards reject bad input (exit 3)", 1, criterion9},
        {10, "CLI reports byte-identical across reruns", 60, criterion10},
    };

    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
            return 2;
        }
    }
    if (only < 0 || only > 10) {
        std::fprintf(stderr, "criterion id must be 1..10\n");
        return 2;
    }

    bool allPass = true;
    for (const Criterion& c : criteria) {
        if (only != 0 && c.id != only) continue;
        Result r;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r = c.run();
        } catch (const Error& e) {
            r = {false, std::string("error: ") + e.what()};
        } catch (const std::exception& e) {
            r = {false, std::string("error: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
        const bool withinBudget = sec < c.budgetSec;
        const bool pass = r.pass && withinBudget;
        allPass = allPass && pass;
        std::printf("criterion %d: %s — %s (%s; %.2f s, budget %.0f s)\n", c.id,
                    pass ? "PASS" : "FAIL", c.what, r.note.c_str(), sec, c.budgetSec);
        if (r.pass && !withinBudget)
            std::printf("criterion %d: note — result correct but over the runtime budget\n",
                        c.id);
    }
    return allPass ? 0 : 1;
}
