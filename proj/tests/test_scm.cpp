#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <set>

#include "perfrec/errors.hpp"
#include "perfrec/scm.hpp"
#include "perfrec/settings.hpp"

using namespace perfrec;

namespace {

NodeId id(const Scm& scm, const std::string& name) { return scm.graph().dag().index(name); }

double total_variation(const std::map<double, double>& p, const std::map<double, double>& q) {
    std::set<double> keys;
    for (const auto& [k, v] : p) keys.insert(k);
    for (const auto& [k, v] : q) keys.insert(k);
    double tv = 0.0;
    for (double k : keys) {
        const double a = p.count(k) ? p.at(k) : 0.0;
        const double b = q.count(k) ? q.at(k) : 0.0;
        tv += std::abs(a - b);
    }
    return tv / 2.0;
}

std::map<double, double> marginal(const Posterior& post, NodeId v) {
    std::map<double, double> out;
    for (std::size_t i = 0; i < post.particles.size(); ++i) out[post.particles[i][v]] += post.weights[i];
    return out;
}

std::map<double, double> empirical(const std::vector<NoiseVector>& draws, NodeId v) {
    std::map<double, double> out;
    for (const auto& u : draws) out[u[v]] += 1.0 / static_cast<double>(draws.size());
    return out;
}

}  // namespace

TEST(Noise, ShiftedBinomialSupportAndMean) {
    const NoiseLaw law = ShiftedBinomial{8, 0.5, 0.0};
    ASSERT_TRUE(law.finite());
    const auto& atoms = *law.atoms();
    ASSERT_EQ(atoms.size(), 9u);
    EXPECT_DOUBLE_EQ(atoms.front().value, -4.0);
    EXPECT_DOUBLE_EQ(atoms.back().value, 4.0);
    EXPECT_NEAR(atoms[4].prob, 70.0 / 256.0, 1e-15);
    EXPECT_NEAR(law.mean(), 0.0, 1e-12);
    EXPECT_NEAR(law.variance(), 2.0, 1e-12);
}

TEST(Noise, MixtureMergesAtoms) {
    const NoiseLaw law = Mixture{{0.5, 0.5}, {NoiseLaw(ShiftedBinomial{2, 0.5, 2}), NoiseLaw(ShiftedBinomial{4, 0.5, 4})}};
    ASSERT_TRUE(law.finite());
    double total = 0.0;
    for (const auto& a : *law.atoms()) total += a.prob;
    EXPECT_NEAR(total, 1.0, 1e-15);
    EXPECT_NEAR(law.mean(), 3.0, 1e-12);
    EXPECT_FALSE(NoiseLaw(Gaussian{0, 1}).finite());
    EXPECT_TRUE(NoiseLaw::point(2.0).finite());
}

TEST(Scm, LAddCauseSupportAndMean) {
    const Scm scm = closed_form_scm("LAdd");
    Stream rng(1);
    const Dataset d = scm.sample(100000, rng);
    std::set<double> support;
    double mean = 0.0;
    for (const auto& r : d.x) {
        support.insert(r[0]);
        mean += r[0];
    }
    mean /= static_cast<double>(d.size());
    EXPECT_EQ(support, (std::set<double>{-4, -3, -2, -1, 0, 1, 2, 3, 4}));
    EXPECT_NEAR(mean, 0.0, 0.03);
}

TEST(Scm, LAddPositiveRateMatchesEnumeration) {
    // Y is integer-valued and symmetric about 0, so 1[Y >= 0] includes the
    // atom at 0: P(L = 1) = 1/2 + P(Y = 0) / 2.
    const auto setting = build_setting("LAdd");
    EXPECT_DOUBLE_EQ(setting->scm.label_threshold(), 0.0);
    double p = 0.0;
    for (const auto& [x, cell] : enumerate_joint(setting->scm)) p += cell.positive;
    EXPECT_NEAR(p, 0.5 + 63.0 / 512.0, 1e-12);
    Stream rng(2);
    EXPECT_NEAR(setting->scm.sample(100000, rng).positive_rate(), p, 0.01);
}

TEST(Scm, SampledSupportMatchesEnumeration) {
    for (const auto& name : synthetic_setting_names()) {
        const auto setting = build_setting(name);
        const auto exact = enumerate_joint(setting->scm);
        std::set<Row> expected;
        for (const auto& [x, cell] : exact)
            if (cell.mass > 0.0) expected.insert(x);
        Stream rng(hash_label(name));
        std::set<Row> seen;
        for (const auto& r : setting->scm.sample(1'000'000, rng).x) seen.insert(r);
        EXPECT_EQ(seen, expected) << name;
    }
}

TEST(Scm, Example1SupportExcludesDegreeWithoutActivity) {
    const Scm scm = closed_form_scm("Example1");
    Stream rng(3);
    std::set<Row> seen;
    for (const auto& r : scm.sample(100000, rng).x) seen.insert(r);
    EXPECT_EQ(seen, (std::set<Row>{{0, 0}, {0, 1}, {1, 1}}));
}

TEST(Scm, InterventionClampsAndResamplesDownstream) {
    const Scm scm = closed_form_scm("LAdd");
    const NodeId xc = id(scm, "X_C");
    const Scm done = scm.intervene({{xc}, {2.0}});
    Stream rng(4);
    const Dataset d = done.sample(10000, rng);
    double mean_y = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(d.x[i][0], 2.0);
        mean_y += d.y[i];
    }
    EXPECT_NEAR(mean_y / static_cast<double>(d.size()), 2.0, 0.05);
    EXPECT_FALSE(scm.clamp(xc).has_value());
    EXPECT_THROW(scm.intervene({{id(scm, "Y")}, {0.0}}), Error);
    EXPECT_THROW(scm.intervene({{xc, xc}, {0.0, 1.0}}), Error);
}

TEST(Abduction, Example1RejectedApplicantUniformPosterior) {
    const Scm scm = closed_form_scm("Example1");
    Stream rng(5);
    const Row x{0, 0};
    AbductionOptions opts;
    opts.particles = 10000;
    const auto draws = abduct(scm, x, 10000, rng, opts);
    const NodeId y = id(scm, "Y");
    double mean = 0.0, hi = 0.0;
    for (const auto& u : draws) {
        mean += u[y];
        hi = std::max(hi, u[y]);
    }
    EXPECT_NEAR(mean / 10000.0, 0.275, 0.01);
    EXPECT_LE(hi, 0.55);
}

TEST(Abduction, LAddEffectResidualPosterior) {
    // s = x_E - 2 x_C = u_Y + u_E = 0 leaves (-1,1), (0,0), (1,-1) with
    // weights 1/16, 1/4, 1/16.
    const auto& scm = build_setting("LAdd")->scm;
    const NodeId uy = id(scm, "Y");
    for (const Row& x : {Row{1, 2}, Row{-2, -4}, Row{0, 0}}) {
        Stream rng(6);
        const Posterior exact = abduction_posterior(scm, x, {}, rng);
        ASSERT_TRUE(exact.exact);
        EXPECT_NEAR(marginal(exact, uy)[0.0], 2.0 / 3.0, 1e-12);

        AbductionOptions sampled;
        sampled.enumeration_cap = 0;
        sampled.particles = 10000;
        const Posterior approx = abduction_posterior(scm, x, sampled, rng);
        EXPECT_FALSE(approx.exact);
        const auto draws = approx.draw(10000, rng);
        EXPECT_NEAR(empirical(draws, uy)[0.0], 2.0 / 3.0, 0.02);
        EXPECT_LE(total_variation(empirical(draws, uy), marginal(exact, uy)), 0.03);
    }
}

TEST(Abduction, SampledMatchesExactAcrossSettings) {
    for (const auto& name : synthetic_setting_names()) {
        const auto& scm = build_setting(name)->scm;
        Stream rng(hash_label(name));
        const Dataset obs = scm.sample(5, rng);
        for (const Row& x : obs.x) {
            const Posterior exact = abduction_posterior(scm, x, {}, rng);
            ASSERT_TRUE(exact.exact) << name;
            AbductionOptions sampled;
            sampled.enumeration_cap = 0;
            sampled.particles = 10000;
            const auto draws = abduction_posterior(scm, x, sampled, rng).draw(10000, rng);
            EXPECT_LE(total_variation(empirical(draws, id(scm, "Y")), marginal(exact, id(scm, "Y"))), 0.03) << name;
        }
    }
}

TEST(Abduction, InfeasibleObservation) {
    const Scm scm = closed_form_scm("Example1");
    Stream rng(7);
    EXPECT_THROW(abduction_posterior(scm, Row{1, 0}, {}, rng), InfeasibleObservation);
    const auto& ladd = build_setting("LAdd")->scm;
    EXPECT_THROW(abduction_posterior(ladd, Row{0, 7}, {}, rng), InfeasibleObservation);
    EXPECT_THROW(abduction_posterior(ladd, Row{0.5, 0}, {}, rng), InfeasibleObservation);
}

TEST(Counterfactual, Example1DegreeAcquisition) {
    const Scm scm = closed_form_scm("Example1");
    Stream rng(8);
    const Dataset post = counterfactual_sample(scm, Row{0, 0}, {{id(scm, "D")}, {1.0}}, 10000, rng,
                                               AbductionOptions{10000, 64});
    EXPECT_NEAR(post.positive_rate(), 0.1 / 0.55, 0.02);
    for (const auto& r : post.x) EXPECT_EQ(r, (Row{1, 1}));
}

TEST(Counterfactual, LAddKeepsNoise) {
    const auto& scm = build_setting("LAdd")->scm;
    Stream rng(9);
    const Row x{1, 2};  // u_Y + u_E = 0
    const Dataset post = counterfactual_sample(scm, x, {{id(scm, "X_C")}, {3.0}}, 2000, rng);
    for (std::size_t i = 0; i < post.size(); ++i) {
        EXPECT_EQ(post.x[i][0], 3.0);
        EXPECT_EQ(post.x[i][1], 6.0);  // 2 x_C + u_Y + u_E
    }
}

TEST(Subpopulation, EffectInterventionIgnoresEffectEvidence) {
    const auto& scm = build_setting("LAdd")->scm;
    const Intervention on_effect{{id(scm, "X_E")}, {5.0}};
    EXPECT_EQ(nondescendant_features(scm, on_effect), (std::vector<NodeId>{id(scm, "X_C")}));
    Stream rng(10);
    const Dataset rows = subpop_sample(scm, Row{1, 2}, on_effect, 20000, rng);
    double pos = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows.x[i], (Row{1, 5}));
        pos += rows.label[i];
    }
    // P(1 + u_Y >= 0) = 1 with u_Y in {-1, 0, 1}.
    EXPECT_NEAR(pos / 20000.0, 1.0, 1e-12);

    const Intervention on_cause{{id(scm, "X_C")}, {-1.0}};
    EXPECT_TRUE(nondescendant_features(scm, on_cause).empty());
    const Dataset fresh = subpop_sample(scm, Row{1, 2}, on_cause, 20000, rng);
    EXPECT_NEAR(fresh.positive_rate(), 0.25, 0.02);  // u_Y = 1
}

TEST(Markov, DSeparatedPairsPassChiSquaredOnFiniteSettings) {
    // Augmented graph: one noise parent per node; independence is tested on
    // sampled (node, noise) columns with a stratified chi-squared test.
    std::size_t tests = 0;
    struct Query {
        std::string setting;
        std::size_t a, b;
        std::vector<std::size_t> z;
        double p;
    };
    std::vector<Query> queries;
    for (const auto& name : synthetic_setting_names()) {
        const auto& scm = build_setting(name)->scm;
        const Dag& g = scm.graph().dag();
        const std::size_t n = g.size();
        std::vector<std::string> names = g.names();
        std::vector<std::pair<std::string, std::string>> edges;
        for (const auto& [p, c] : g.edges()) edges.emplace_back(g.name(p), g.name(c));
        for (NodeId v = 0; v < n; ++v) {
            names.push_back("U_" + g.name(v));
            edges.emplace_back("U_" + g.name(v), g.name(v));
        }
        const Dag aug(names, edges);

        Stream rng(hash_label(name) + 11);
        const Dataset d = scm.sample(100000, rng);
        auto column = [&](std::size_t col, std::size_t row) {
            if (col >= n) return d.noise[row][col - n];
            if (col == scm.graph().target()) return d.y[row];
            return d.x[row][scm.graph().feature_position(col)];
        };

        for (std::size_t a = 0; a < 2 * n; ++a)
            for (std::size_t b = a + 1; b < 2 * n; ++b)
                for (std::size_t z = 0; z <= 2 * n; ++z) {
                    if (z == a || z == b) continue;
                    std::vector<std::size_t> zs;
                    if (z < 2 * n) zs.push_back(z);
                    if (!d_separated(aug, {a}, {b}, zs)) continue;
                    // strata -> (a value, b value) counts
                    std::map<double, std::map<std::pair<double, double>, double>> strata;
                    for (std::size_t i = 0; i < d.size(); ++i)
                        strata[zs.empty() ? 0.0 : column(z, i)][{column(a, i), column(b, i)}] += 1.0;
                    double chi2 = 0.0, df = 0.0;
                    for (const auto& [zv, cells] : strata) {
                        std::map<double, double> ra, rb;
                        double total = 0.0;
                        for (const auto& [ab, c] : cells) {
                            ra[ab.first] += c;
                            rb[ab.second] += c;
                            total += c;
                        }
                        if (ra.size() < 2 || rb.size() < 2) continue;
                        for (const auto& [av, ca] : ra)
                            for (const auto& [bv, cb] : rb) {
                                const double expected = ca * cb / total;
                                const auto it = cells.find({av, bv});
                                const double observed = it == cells.end() ? 0.0 : it->second;
                                chi2 += (observed - expected) * (observed - expected) / expected;
                            }
                        df += static_cast<double>((ra.size() - 1) * (rb.size() - 1));
                    }
                    if (df == 0.0) continue;
                    const double p = boost::math::cdf(complement(boost::math::chi_squared(df), chi2));
                    queries.push_back({name, a, b, zs, p});
                    ++tests;
                }
    }
    ASSERT_GT(tests, 50u);
    // Bonferroni over every test at family-wise level 0.01.
    for (const auto& q : queries) EXPECT_GT(q.p, 0.01 / static_cast<double>(tests)) << q.setting << " " << q.a << "," << q.b;
}

TEST(Assumption2, AggregatedNoiseResiduals) {
    for (const auto& name : synthetic_setting_names()) {
        const auto setting = build_setting(name);
        Stream rng(hash_label(name) + 12);
        const AggregateForm form = setting->assumption2_holds() ? setting->assumption2 : AggregateForm::additive;
        double worst_additive = 0.0, worst_multiplicative = 0.0, worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const NoiseVector u = setting->scm.sample_noise(rng);
            worst = std::max(worst, aggregation_residual(setting->scm, form, u));
            worst_additive = std::max(worst_additive, aggregation_residual(setting->scm, AggregateForm::additive, u));
            worst_multiplicative =
                std::max(worst_multiplicative, aggregation_residual(setting->scm, AggregateForm::multiplicative, u));
        }
        if (setting->assumption2_holds()) {
            EXPECT_LE(worst, 1e-9) << name;
        } else {
            EXPECT_GT(worst_additive, 1e-3) << name;
            EXPECT_GT(worst_multiplicative, 1e-3) << name;
        }
    }
    EXPECT_EQ(build_setting("LAdd")->assumption2, AggregateForm::additive);
    EXPECT_EQ(build_setting("LMult")->assumption2, AggregateForm::multiplicative);
}

TEST(Fit, LinearGaussianRecoversChain) {
    const Scm truth = closed_form_scm("Example2");
    Stream rng(13);
    const Dataset d = truth.sample(200000, rng);
    Table t;
    t.columns = {"X_C", "Y", "X_E"};
    for (std::size_t i = 0; i < d.size(); ++i) t.rows.push_back({d.x[i][0], d.y[i], d.x[i][1]});
    const Scm fit = fit_linear_gaussian(truth.graph(), t);
    const NodeId y = id(fit, "Y"), e = id(fit, "X_E");
    EXPECT_NEAR(fit.evaluate_node(y, std::vector<double>{1.0, 0.0, 0.0}, 0.0), 1.0, 0.02);
    EXPECT_NEAR(fit.evaluate_node(e, std::vector<double>{0.0, 2.0, 0.0}, 0.0), 2.0, 0.03);
    EXPECT_NEAR(std::get<Gaussian>(fit.noise_law(y).variant()).sigma, 1.0, 0.01);
    EXPECT_NEAR(fit.label_threshold(), 0.0, 0.02);
}

TEST(Median, NumpyConvention) {
    EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
    EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
}
