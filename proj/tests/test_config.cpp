#include <gtest/gtest.h>

#include "perfrec/config.hpp"
#include "perfrec/errors.hpp"

using namespace perfrec;

namespace {

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const InputError& e) {
        return e.line();
    }
    return -1;
}

std::string error_text(const std::string& text) {
    try {
        parse_config(text);
    } catch (const InputError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Config, ParsesFieldsAndExpandsLists) {
    const auto cs = parse_config(R"(# sweep
setting = LAdd, NLMult
method = indICR,CE
seeds = 40-42, 47
samples = 500   # fewer particles
noise = resampled
penalty = literal
)");
    ASSERT_EQ(cs.size(), 4u);
    EXPECT_EQ(cs[0].setting, "LAdd");
    EXPECT_EQ(cs[0].method, Method::indICR);
    EXPECT_EQ(cs[1].method, Method::CE);
    EXPECT_EQ(cs[3].setting, "NLMult");
    EXPECT_EQ(cs[0].seeds, (std::vector<std::uint64_t>{40, 41, 42, 47}));
    EXPECT_EQ(cs[0].samples, 500u);
    EXPECT_EQ(cs[0].noise, NoiseMode::resampled);
    EXPECT_EQ(cs[0].penalty, Penalty::literal);
    EXPECT_EQ(cs[0].resolved_train_rows(), 2000u);
    EXPECT_EQ(cs[0].resolved_cohort_size(), 500u);
}

TEST(Config, ProfileSetsSizes) {
    auto c = parse_config("setting = LAdd\nprofile = paper\n").at(0);
    EXPECT_EQ(c.resolved_train_rows(), 100000u);
    EXPECT_EQ(c.resolved_cohort_size(), 5000u);
    c = parse_config("setting = LAdd\nprofile = paper\ncohort_size = 10\n").at(0);
    EXPECT_EQ(c.resolved_cohort_size(), 10u);
}

TEST(Config, RoundTripsThroughText) {
    const auto c = parse_config("setting = NLAdd\nmethod = subCR\nseeds = 1,5\ntarget_success = 0.8\n").at(0);
    const std::string text = to_conf(c);
    const auto back = parse_config(text).at(0);
    EXPECT_EQ(to_conf(back), text);
    EXPECT_EQ(back.seeds, c.seeds);
    EXPECT_DOUBLE_EQ(back.target_success, 0.8);
}

TEST(Config, ErrorsNameLineOrField) {
    EXPECT_EQ(error_line("setting = LAdd\n\nbogus = 1\n"), 3);
    EXPECT_EQ(error_line("setting = LAdd\nsetting = LMult\n"), 2);
    EXPECT_EQ(error_line("setting = LAdd\nsamples = many\n"), 2);
    EXPECT_EQ(error_line("just words\n"), 1);
    EXPECT_NE(error_text("method = CE\n").find("setting"), std::string::npos);
    EXPECT_NE(error_text("setting = LAdd\nmethod = ICR\n").find("method"), std::string::npos);
    EXPECT_NE(error_text("setting = Nope\n").find("Nope"), std::string::npos);
    EXPECT_NE(error_text("setting = LAdd\ntarget_success = 1.5\n").find("target_success"), std::string::npos);
    EXPECT_NE(error_text("setting = GPA\n").find("gpa_csv"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/x.conf"), InputError);
}

TEST(Config, SeedLists) {
    EXPECT_EQ(parse_seed_list("3"), (std::vector<std::uint64_t>{3}));
    EXPECT_EQ(parse_seed_list("1-3,9"), (std::vector<std::uint64_t>{1, 2, 3, 9}));
    EXPECT_THROW(parse_seed_list("5-2"), Error);
    EXPECT_THROW(parse_seed_list("a"), Error);
}
