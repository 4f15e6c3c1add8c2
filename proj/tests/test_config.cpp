#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "spdc/commands.hpp"

using namespace spdc;

namespace {

const char* kReference = R"(
[crystal]
length_um = 500
cut_angle_deg = 30

[pump]
wavelength_nm = 390
tau_fwhm_fs = 100

[collection]
alpha_deg = auto
waist_um = 70

[run]
method = cga
)";

std::filesystem::path write_temp(const std::string& name, const std::string& text)
{
    const auto p = std::filesystem::temp_directory_path() / ("spdc_test_" + name);
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST(Config, ReferenceFileProducesExpectedSetup)
{
    const auto raw = parse_raw_config_text(kReference);
    const auto c = setup_from_raw(raw);
    EXPECT_DOUBLE_EQ(c.crystal.length, 500.0);
    EXPECT_NEAR(c.pump.omega0, units::wavelength_to_omega(0.78), 1e-14);
    EXPECT_NEAR(c.pump.tau_p, 100.0 / std::sqrt(std::log(2.0)), 1e-12);
    EXPECT_NEAR(c.pump.w_p, 35.0, 1e-12);
    EXPECT_NEAR(units::rad_to_deg(c.collection.alpha_s), 2.2094, 1e-3);
    EXPECT_EQ(c.collection.alpha_s, c.collection.alpha_i);
    EXPECT_FALSE(c.filters.active());
    EXPECT_EQ(method_from_raw(raw), Method::cga());
}

TEST(Config, UnknownKeyIsRejected)
{
    auto raw = parse_raw_config_text(kReference);
    raw["pump.wasit_um"] = "30";
    EXPECT_THROW(setup_from_raw(raw), ConfigError);
}

TEST(Config, MalformedValuesAreRejected)
{
    auto raw = parse_raw_config_text(kReference);
    raw["crystal.length_um"] = "long";
    EXPECT_THROW(setup_from_raw(raw), ConfigError);
    raw = parse_raw_config_text(kReference);
    raw["crystal.length_um"] = "-3";
    EXPECT_THROW(setup_from_raw(raw), ConfigError);
    raw = parse_raw_config_text(kReference);
    raw["pump.tau_p_fs"] = "60";
    EXPECT_THROW(setup_from_raw(raw), ConfigError);
    EXPECT_THROW(parse_raw_config_text("[crystal\nlength_um"), ConfigError);
}

TEST(Config, FilterWidthConvertsToAngularFrequency)
{
    auto raw = parse_raw_config_text(kReference);
    raw["filters.sigma_nm"] = "2";
    const auto c = setup_from_raw(raw);
    ASSERT_TRUE(c.filters.sigma_s && c.filters.sigma_i);
    EXPECT_NEAR(*c.filters.sigma_s, 2.0 * pi * speed_of_light * 2e-3 / (0.78 * 0.78), 1e-12);
}

TEST(ConfigHash, StableAndSensitive)
{
    const auto a = setup_from_raw(parse_raw_config_text(kReference));
    const auto b = setup_from_raw(parse_raw_config_text(kReference));
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    auto c = a;
    c.crystal.length = std::nextafter(c.crystal.length, 1e9);
    EXPECT_NE(config_hash(a), config_hash(c));
    auto d = a;
    d.filters.sigma_s = 0.01;
    EXPECT_NE(config_hash(a), config_hash(d));
}

TEST(Scan, AxesConstraintsAndOrdering)
{
    auto raw = parse_raw_config_text(kReference);
    raw["scan.axis1"] = "crystal.length_um:100:1000:3:log";
    raw["scan.axis2"] = "collection.waist_um:50:150:5";
    raw["scan.constraints"] = "pump.waist_um = 0.5 * collection.waist_um";
    raw["scan.quantities"] = "Rc_ppm,tau_ppm,margins";
    const auto s = scan_from_raw(raw);
    ASSERT_EQ(s.size(), 15u);
    EXPECT_NEAR(s.axes[0].values()[1], std::sqrt(1e5), 1e-9);
    std::vector<double> coords;
    const auto p = scan_point(raw, s, 7, &coords);
    EXPECT_NEAR(coords[0], std::sqrt(1e5), 1e-9);
    EXPECT_DOUBLE_EQ(coords[1], 100.0);
    EXPECT_DOUBLE_EQ(std::stod(p.at("pump.waist_um")), 50.0);
    EXPECT_EQ(p.count("scan.axis1"), 0u);
    const auto cols = cli::scan_columns(s);
    EXPECT_EQ(cli::join_row(cols), "index,crystal.length_um,collection.waist_um,Rc_ppm,tau_ppm,tau_margin,waist_margin,config_hash,status,error");
}

TEST(Scan, BadSpecsAreConfigErrors)
{
    auto raw = parse_raw_config_text(kReference);
    raw["scan.axis1"] = "crystal.length_um:100:1000";
    EXPECT_THROW(scan_from_raw(raw), ConfigError);
    raw["scan.axis1"] = "crystal.length_um:100:1000:3";
    raw["scan.quantities"] = "Rc,colour";
    EXPECT_THROW(scan_from_raw(raw), ConfigError);
    raw["scan.quantities"] = "Rc";
    raw["scan.typo"] = "1";
    EXPECT_THROW(scan_from_raw(raw), ConfigError);
}

TEST(Scan, FailedPointsAreRecordedAndResumeSkipsDoneRows)
{
    auto raw = parse_raw_config_text(kReference);
    raw["scan.axis1"] = "crystal.cut_angle_deg:20:30:3";
    raw["scan.quantities"] = "Rc_ppm";
    const auto s = scan_from_raw(raw);
    const auto path = (std::filesystem::temp_directory_path() / "spdc_test_scan.csv").string();
    std::filesystem::remove(path);
    auto summary = cli::run_scan(raw, s, Method::perfect(), nullptr, path, false, 1);
    EXPECT_EQ(summary.total, 3u);
    EXPECT_EQ(summary.succeeded, 1u);
    std::ifstream in(path);
    std::string header, r0, r1, r2;
    std::getline(in, header);
    std::getline(in, r0);
    std::getline(in, r1);
    std::getline(in, r2);
    EXPECT_NE(r0.find(",failed,"), std::string::npos);
    EXPECT_NE(r2.find(",ok,"), std::string::npos);
    in.close();
    summary = cli::run_scan(raw, s, Method::perfect(), nullptr, path, true, 1);
    EXPECT_EQ(summary.skipped, 3u);
    EXPECT_EQ(summary.succeeded, 1u);
}

TEST(Cli, ExitCodesFollowErrorClass)
{
    EXPECT_EQ(cli::guarded([] { return 0; }), cli::ok);
    std::ostringstream err;
    EXPECT_EQ(cli::guarded([]() -> int { throw ConfigError("x"); }, err), cli::config_error);
    EXPECT_EQ(cli::guarded([]() -> int { throw NoPhaseMatchingError("x"); }, err), cli::physics_error);
    EXPECT_EQ(cli::guarded([]() -> int { throw WindowError("x"); }, err), cli::numeric_error);

    cli::Options opt;
    opt.config_path = write_temp("bad_angle.ini", "[crystal]\ncut_angle_deg = 20\n").string();
    EXPECT_EQ(cli::guarded([&] { return cli::cmd_angle(opt); }, err), cli::physics_error);
    opt.config_path = write_temp("typo.ini", "[crystal]\nlenght_um = 20\n").string();
    EXPECT_EQ(cli::guarded([&] { return cli::cmd_angle(opt); }, err), cli::config_error);
    opt.config_path = "/nonexistent/spdc.ini";
    EXPECT_EQ(cli::guarded([&] { return cli::cmd_angle(opt); }, err), cli::config_error);
}

TEST(Cli, AngleJsonReportsOpeningAngle)
{
    cli::Options opt;
    opt.config_path = write_temp("ref.ini", kReference).string();
    opt.json_output = true;
    std::ostringstream out;
    ASSERT_EQ(cli::cmd_angle(opt, out), cli::ok);
    const auto j = nlohmann::json::parse(out.str());
    EXPECT_NEAR(j["alpha_deg"].get<double>(), 2.2094, 1e-3);
    EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
}

TEST(Cli, EpmfCsvIsDeterministicAndHasSidecar)
{
    std::string text = kReference;
    text += "\n[grid]\nn = 16\nwindow = 1.0\n";
    cli::Options opt;
    opt.config_path = write_temp("epmf.ini", text).string();
    opt.method = "ga";
    std::ostringstream a, b;
    ASSERT_EQ(cli::cmd_epmf(opt, a), cli::ok);
    ASSERT_EQ(cli::cmd_epmf(opt, b), cli::ok);
    const std::string csv = a.str();
    EXPECT_EQ(csv, b.str());
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "omega_s,omega_i,lambda_s_nm,lambda_i_nm,re,im,abs");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 16 * 16);

    const auto out = (std::filesystem::temp_directory_path() / "spdc_test_epmf.csv").string();
    opt.out = out;
    std::ostringstream msg;
    ASSERT_EQ(cli::cmd_epmf(opt, msg), cli::ok);
    std::ifstream side(out + ".json");
    const auto j = nlohmann::json::parse(side);
    EXPECT_EQ(j["method"], "ga");
    EXPECT_FALSE(std::filesystem::exists(out + ".partial"));
}

TEST(Cli, MetricsJsonFieldsPresent)
{
    std::string text = kReference;
    text += "\n[grid]\nn = 24\n";
    cli::Options opt;
    opt.config_path = write_temp("metrics.ini", text).string();
    std::ostringstream out;
    ASSERT_EQ(cli::cmd_metrics(opt, out), cli::ok);
    const auto j = nlohmann::json::parse(out.str());
    for (const char* key : {"Rc", "purity", "schmidt_number", "schmidt_head", "validity", "config_hash"}) EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_GT(j["purity"].get<double>(), 0.0);
    EXPECT_LE(j["purity"].get<double>(), 1.0);
}
