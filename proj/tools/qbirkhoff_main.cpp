#include "qbirkhoff/birkhoff.hpp"
#include "qbirkhoff/confluence.hpp"
#include "qbirkhoff/description.hpp"
#include "qbirkhoff/error.hpp"
#include "qbirkhoff/isomonodromy.hpp"
#include "qbirkhoff/qpvi.hpp"
#include "qbirkhoff/rng.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using qb::cplx;
using ojson = nlohmann::ordered_json;

ojson jc(cplx z) { return ojson::array({z.real(), z.imag()}); }

ojson jcList(const std::vector<cplx>& v) {
    ojson out = ojson::array();
    for (cplx z : v) out.push_back(jc(z));
    return out;
}

ojson jmat(const qb::CMatrix& m) {
    ojson out = ojson::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        ojson row = ojson::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(jc(m(i, j)));
        out.push_back(row);
    }
    return out;
}

ojson jscaled(qb::ScaledCMatrix v) {
    v.normalize();
    ojson out;
    out["value"] = jmat(v.m);
    out["log-scale"] = v.logScale;
    return out;
}

ojson jspirals(const qb::SpiralSet& s) {
    ojson out = ojson::array();
    for (const qb::Spiral& sp : s.spirals()) {
        ojson o;
        o["base"] = jc(sp.base);
        if (sp.minExp != std::numeric_limits<long>::min()) o["min-exp"] = sp.minExp;
        if (sp.maxExp != std::numeric_limits<long>::max()) o["max-exp"] = sp.maxExp;
        out.push_back(o);
    }
    return out;
}

void writeReport(const std::string& outPath, const ojson& rep) {
    std::string text = rep.dump(2);
    text += '\n';
    if (outPath.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(outPath, std::ios::binary);
    if (!f) qb::fail(qb::ErrorCode::SchemaError, outPath + ": cannot open for writing");
    f << text;
    std::cout << "wrote " << outPath << "\n";
}

class CsvFile {
public:
    explicit CsvFile(const std::string& path) {
        if (path.empty()) return;
        f_.open(path, std::ios::binary);
        if (!f_) qb::fail(qb::ErrorCode::SchemaError, path + ": cannot open for writing");
        f_ << "eps,probe_re,probe_im,sector,residual_kind,residual_value\n";
    }
    void row(double eps, cplx probe, long sector, const std::string& kind,
             double value) {
        if (!f_.is_open()) return;
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%ld,", eps,
                      probe.real(), probe.imag(), sector);
        f_ << buf << kind << ',';
        std::snprintf(buf, sizeof(buf), "%.17g\n", value);
        f_ << buf;
    }

private:
    std::ofstream f_;
};

ojson descHeader(const char* command, const qb::SystemDescription& d) {
    ojson rep;
    rep["command"] = command;
    if (!d.name.empty()) rep["name"] = d.name;
    rep["kind"] = d.kind;
    rep["q0"] = jc(d.q0);
    rep["eps"] = d.eps;
    return rep;
}

std::vector<cplx> samplePoints(const qb::QContext& ctx, const qb::SpiralSet& avoid,
                               std::uint64_t seed, int count, double rmin,
                               double rmax, double guard = 2e-3) {
    qb::ProbeSampler sampler(seed);
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        out.push_back(sampler.annulusPointAvoiding(ctx, avoid, guard, rmin, rmax));
    return out;
}

// ---- solve -------------------------------------------------------------------

int cmdSolve(const qb::SystemDescription& desc, const std::string& outPath,
             int probes, std::uint64_t seed) {
    qb::RationalQSystem sys = qb::instantiate_system(desc);
    const qb::QContext& ctx = sys.ctx();
    qb::LocalSolution y0 = qb::local_series(sys, qb::Side::Origin, desc.tolerance);
    qb::LocalSolution yInf =
        qb::local_series(sys, qb::Side::Infinity, desc.tolerance);

    const qb::SystemData& sd = sys.data();
    ojson rep = descHeader("solve", desc);
    rep["q"] = jc(ctx.q);
    rep["nu"] = sys.nu();
    ojson org;
    org["mu"] = sd.mu0;
    org["r"] = jc(sd.r0);
    org["eigenvalues"] = jcList(sd.eigA0);
    org["series-terms"] = y0.H.size();
    org["series-radius"] = y0.seriesRadius;
    rep["origin"] = org;
    ojson inf;
    inf["mu"] = sd.muInf;
    inf["r"] = jc(sd.rInf);
    inf["eigenvalues"] = jcList(sd.eigAInf);
    inf["series-terms"] = yInf.H.size();
    inf["series-radius"] = yInf.seriesRadius;
    rep["infinity"] = inf;
    rep["coefficient-poles"] = jcList(sd.polesRA);
    rep["det-zeros"] = jcList(sd.detZeros);

    qb::SpiralSet avoid = y0.poleRegistry;
    avoid.merge(yInf.poleRegistry);
    std::vector<cplx> pts =
        samplePoints(ctx, avoid, seed, probes, 0.75, 0.75 * std::abs(ctx.q));
    ojson jprobes = ojson::array();
    for (cplx z : pts) {
        ojson p;
        p["z"] = jc(z);
        p["y0"] = jscaled(qb::eval_solution(sys, y0, z));
        p["yinf"] = jscaled(qb::eval_solution(sys, yInf, z));
        jprobes.push_back(p);
    }
    rep["probes"] = jprobes;
    writeReport(outPath, rep);
    return 0;
}

// ---- connection --------------------------------------------------------------

int cmdConnection(const qb::SystemDescription& desc, const std::string& outPath,
                  const std::string& csvPath, int probes, int samples,
                  std::uint64_t seed) {
    qb::RationalQSystem sys = qb::instantiate_system(desc);
    const qb::QContext& ctx = sys.ctx();
    qb::ConnectionData conn = qb::make_connection(sys, desc.tolerance);

    double ell = qb::ellipticity_residual(sys, conn, 1.0, samples, seed);
    qb::PoleScanResult scan = qb::pole_scan(sys, conn);

    ojson rep = descHeader("connection", desc);
    rep["q"] = jc(ctx.q);
    rep["nu"] = sys.nu();
    rep["ellipticity-residual"] = ell;
    rep["ellipticity-samples"] = samples;
    rep["registry"] = jspirals(conn.registry);
    ojson js;
    js["hits"] = scan.hits.size();
    js["unmatched"] = scan.unmatchedCount;
    js["max-matched-distance"] = scan.maxMatchedDistance;
    js["median-value"] = scan.medianValue;
    rep["pole-scan"] = js;

    std::vector<cplx> pts =
        samplePoints(ctx, conn.registry, seed + 1, probes, 1.0, std::abs(ctx.q));
    CsvFile csv(csvPath);
    ojson jprobes = ojson::array();
    for (cplx z : pts) {
        qb::CMatrix pz = qb::connection_eval(sys, conn, z);
        qb::CMatrix pqz = qb::connection_eval(sys, conn, ctx.q * z);
        double res = qb::relDiff(pqz, pz);
        ojson p;
        p["z"] = jc(z);
        p["P"] = jmat(pz);
        p["ellipticity"] = res;
        jprobes.push_back(p);
        csv.row(ctx.eps, z, 0, "ellipticity", res);
    }
    rep["probes"] = jprobes;
    writeReport(outPath, rep);
    return 0;
}

// ---- deform ------------------------------------------------------------------

int cmdDeform(const qb::SystemDescription& desc, const std::string& outPath,
              const std::string& csvPath, int probes, std::uint64_t seed,
              int degree, double fitRadius) {
    qb::QContext ctx = qb::context_of(desc);
    qb::DeformationFamily fam = qb::make_deformation_family(
        ctx, qb::family_builder(desc), {desc.t});
    qb::DeformationEvaluator ev(fam, desc.t, desc.tolerance);

    std::vector<cplx> pts =
        samplePoints(ctx, ev.avoidSet(), seed, probes, 0.9, 0.9 * std::abs(ctx.q));
    double pc = qb::pseudo_constancy_test(ev, pts);
    double lax0 = qb::lax_residual(ev, qb::Side::Origin, pts);
    double laxInf = qb::lax_residual(ev, qb::Side::Infinity, pts);

    if (fitRadius <= 0.0) fitRadius = 1.7 * std::max(1.0, std::abs(desc.t));
    const std::size_t nu = ev.sysT().nu();
    qb::RationalityReport rat0 = qb::rationality_check(
        [&](cplx z) { return ev.deformationMatrix(z, qb::Side::Origin); },
        nu, degree, fitRadius);
    qb::RationalityReport ratInf = qb::rationality_check(
        [&](cplx z) { return ev.deformationMatrix(z, qb::Side::Infinity); },
        nu, degree, fitRadius);

    // the two sides must produce the same meromorphic multiplier
    double sideGap = 0.0;
    for (cplx z : pts) {
        qb::CMatrix m0 = ev.deformationMatrix(z, qb::Side::Origin);
        qb::CMatrix mInf = ev.deformationMatrix(z, qb::Side::Infinity);
        sideGap = std::max(sideGap, qb::relDiff(m0, mInf));
    }

    ojson rep = descHeader("deform", desc);
    rep["t"] = jc(desc.t);
    ojson cls = ojson::array();
    for (std::size_t i = 0; i < fam.poleClasses.size(); ++i) {
        ojson o;
        o["pole"] = jc(fam.polesAtFirstT[i]);
        switch (fam.poleClasses[i]) {
        case qb::PoleClass::Constant: o["class"] = "constant"; break;
        case qb::PoleClass::ProportionalToT: o["class"] = "proportional-to-t"; break;
        default: o["class"] = "mixed"; break;
        }
        cls.push_back(o);
    }
    rep["pole-classes"] = cls;
    rep["classification-clean"] = fam.classificationClean;
    rep["pseudo-constancy-residual"] = pc;
    rep["lax-residual-origin"] = lax0;
    rep["lax-residual-infinity"] = laxInf;
    rep["side-agreement-gap"] = sideGap;
    auto jrat = [](const qb::RationalityReport& r) {
        ojson o;
        o["is-rational"] = r.isRational;
        o["fit-residual"] = r.fitResidual;
        o["degree-bound"] = r.degreeBound;
        o["poles"] = jcList(r.poles);
        return o;
    };
    rep["deformation-matrix-origin"] = jrat(rat0);
    rep["deformation-matrix-infinity"] = jrat(ratInf);

    CsvFile csv(csvPath);
    for (cplx z : pts) {
        qb::CMatrix pt = ev.connectionAtT(z);
        qb::CMatrix pqt = ev.connectionAtQT(z);
        csv.row(ctx.eps, z, 0, "pseudo-constancy", qb::relDiff(pqt, pt));
    }
    writeReport(outPath, rep);
    return 0;
}

// ---- confluence ----------------------------------------------------------------

std::vector<double> defaultEpsGrid() {
    std::vector<double> g;
    for (int k = 1; k <= 6; ++k) g.push_back(std::pow(2.0, -k));
    return g;
}

int cmdConfluence(const qb::SystemDescription& desc, const std::string& outPath,
                  const std::string& csvPath, const std::vector<double>& gridArg,
                  double probeRadius) {
    qb::ConfluenceFamily fam = qb::instantiate_confluence(desc);
    std::vector<double> grid = gridArg;
    if (grid.empty()) grid = desc.epsGrid;
    if (grid.empty()) grid = defaultEpsGrid();

    qb::CrossingReport report = qb::crossing_check(fam, grid, probeRadius);

    ojson rep = descHeader("confluence", desc);
    rep["variant"] = desc.variant;
    rep["eps-grid"] = grid;
    ojson rays = ojson::array();
    for (const qb::SectorRay& r : report.partition.rays) {
        ojson o;
        o["angle"] = r.angle;
        o["pole-index"] = r.poleIndex;
        rays.push_back(o);
    }
    rep["rays"] = rays;
    rep["ode-poles"] = jcList(fam.odePoles);

    ojson jcross = ojson::array();
    for (const auto& c : report.crossings) {
        ojson o;
        o["ray-index"] = c.rayIndex;
        o["pole"] = jc(fam.odePoles[c.poleIndex]);
        o["residual"] = c.residual;
        o["error-bar"] = c.errorBar;
        o["oracle-det-residual"] = c.oracleDetResidual;
        o["empirical"] = jmat(c.empirical);
        o["oracle"] = jmat(c.oracle);
        jcross.push_back(o);
    }
    rep["crossings"] = jcross;

    const qb::SweepResult& sw = report.sweep;
    ojson jinc = ojson::array();
    for (std::size_t gi = 1; gi < sw.epsGrid.size(); ++gi) {
        ojson o;
        o["eps"] = sw.epsGrid[gi];
        double worst = 0.0;
        for (double v : sw.increment[gi]) worst = std::max(worst, v);
        o["max-increment"] = worst;
        jinc.push_back(o);
    }
    rep["increments"] = jinc;

    CsvFile csv(csvPath);
    for (std::size_t gi = 1; gi < sw.epsGrid.size(); ++gi)
        for (std::size_t pi = 0; pi < sw.probes.size(); ++pi)
            csv.row(sw.epsGrid[gi], sw.probes[pi],
                    static_cast<long>(sw.probeSector[pi]), "increment",
                    sw.increment[gi][pi]);
    for (const auto& c : report.crossings)
        csv.row(sw.epsGrid.back(), fam.odePoles[c.poleIndex],
                static_cast<long>(c.rayIndex), "crossing", c.residual);

    writeReport(outPath, rep);
    return 0;
}

// ---- qpvi-verify ----------------------------------------------------------------

int cmdQpvi(const qb::SystemDescription& desc, const std::string& outPath,
            const std::string& csvPath, int probes, std::uint64_t seed,
            bool negativeControl) {
    qb::QContext ctx = qb::context_of(desc);
    qb::JimboSakaiInstance inst = qb::instantiate_jimbo_sakai(desc, desc.tolerance);
    qb::JimboSakaiInstance instQT = qb::build_jimbo_sakai(
        ctx, desc.calA0, desc.calA1, desc.calAt, ctx.q * desc.t, desc.tolerance);

    qb::SpiralSet avoid = inst.probeAvoidSet();
    avoid.merge(instQT.probeAvoidSet());
    std::vector<cplx> pts =
        samplePoints(ctx, avoid, seed, probes, 0.8, 0.8 * std::abs(ctx.q));

    double th2 = qb::comparison_residual(inst, pts);
    double fr = qb::series_ratio_residual(inst, pts);
    qb::CriterionReport crit = qb::criterion_check(
        ctx, desc.calA0, desc.calA1, desc.calAt, desc.t, pts);

    ojson rep = descHeader("qpvi-verify", desc);
    rep["t"] = jc(desc.t);
    rep["theta-eigenvalues"] = jcList(inst.thetaEig);
    rep["c-eigenvalues"] = jcList(inst.cEig);
    rep["det-roots"] = jcList(inst.detRoots);
    rep["comparison-residual"] = th2;
    rep["series-ratio-residual"] = fr;
    ojson jcrit;
    jcrit["q-residual"] = crit.qResidual;
    jcrit["p-residual"] = crit.pResidual;
    jcrit["q-pseudo-constant"] = crit.qPseudoConstant;
    jcrit["p-criterion"] = crit.pCriterion;
    jcrit["tolerance"] = crit.tol;
    rep["criterion"] = jcrit;

    CsvFile csv(csvPath);
    for (cplx z : pts)
        csv.row(ctx.eps, z, 0, "comparison",
                qb::comparison_residual(inst, {z}));

    if (negativeControl) {
        struct Control {
            const char* name;
            qb::ComparisonCorruption c;
        };
        const Control controls[] = {
            {"drop-q-power", qb::ComparisonCorruption::DropQPower},
            {"alt-q-power-minus-3", qb::ComparisonCorruption::AltQPowerMinus3},
            {"drop-a2-square", qb::ComparisonCorruption::DropA2Square},
            {"drop-lambda-b0-inverse", qb::ComparisonCorruption::DropLambdaB0Inverse},
            {"drop-lambda-t-b0", qb::ComparisonCorruption::DropLambdaTB0},
            {"theta-num-once", qb::ComparisonCorruption::ThetaNumOnce},
            {"theta-den-wrong-arg", qb::ComparisonCorruption::ThetaDenWrongArg},
        };
        ojson neg;
        for (const Control& c : controls)
            neg[c.name] = qb::comparison_residual(inst, pts, c.c);
        rep["negative-controls"] = neg;
    }

    writeReport(outPath, rep);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Birkhoff connection matrices of Fuchsian q-difference systems"};
    app.require_subcommand(1);

    std::string inPath, outPath, csvPath;
    std::uint64_t seedArg = 0;
    bool seedSet = false;
    int probesArg = 0;
    int samplesArg = 64;
    int degreeArg = 4;
    double fitRadiusArg = 0.0;
    double probeRadiusArg = 1.0;
    std::vector<double> epsGridArg;
    bool negativeControl = false;

    auto addCommon = [&](CLI::App* cmd) {
        cmd->add_option("input", inPath, "system description (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", outPath, "write the JSON report here");
        cmd->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t& v) {
                seedArg = v;
                seedSet = true;
            },
            "override the probe seed");
        cmd->add_option("--probes", probesArg, "number of probe points");
        return cmd;
    };

    CLI::App* solve = addCommon(app.add_subcommand(
        "solve", "build the local solutions at 0 and infinity"));

    CLI::App* conn = addCommon(app.add_subcommand(
        "connection", "compute the connection matrix and its diagnostics"));
    conn->add_option("--csv", csvPath, "per-probe residual CSV");
    conn->add_option("--samples", samplesArg, "ellipticity sample count");

    CLI::App* deform = addCommon(app.add_subcommand(
        "deform", "deformation-family diagnostics at the declared t"));
    deform->add_option("--csv", csvPath, "per-probe residual CSV");
    deform->add_option("--degree", degreeArg, "rational fit degree bound");
    deform->add_option("--fit-radius", fitRadiusArg,
                       "circle radius for the rational fit (0 = auto)");

    CLI::App* conf = app.add_subcommand(
        "confluence", "sector limits of the connection matrix as eps -> 0");
    conf->add_option("input", inPath, "system description (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    conf->add_option("--out", outPath, "write the JSON report here");
    conf->add_option("--csv", csvPath, "sweep increment CSV");
    conf->add_option("--eps-grid", epsGridArg,
                     "decreasing eps values (overrides the description)");
    conf->add_option("--probe-radius", probeRadiusArg, "probe radius");

    CLI::App* qpvi = addCommon(app.add_subcommand(
        "qpvi-verify", "verify the degree-two comparison and criterion"));
    qpvi->add_option("--csv", csvPath, "per-probe residual CSV");
    qpvi->add_flag("--negative-control", negativeControl,
                   "also evaluate the corrupted comparison identities");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        qb::SystemDescription desc = qb::load_description(inPath);
        std::uint64_t seed = seedSet ? seedArg : desc.seed;
        int probes = probesArg > 0 ? probesArg : desc.probes;
        if (solve->parsed()) return cmdSolve(desc, outPath, probes, seed);
        if (conn->parsed())
            return cmdConnection(desc, outPath, csvPath, probes, samplesArg, seed);
        if (deform->parsed())
            return cmdDeform(desc, outPath, csvPath, probes, seed, degreeArg,
                             fitRadiusArg);
        if (conf->parsed())
            return cmdConfluence(desc, outPath, csvPath, epsGridArg,
                                 probeRadiusArg);
        if (qpvi->parsed())
            return cmdQpvi(desc, outPath, csvPath, probes, seed, negativeControl);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const qb::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exitCode();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
