#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "test_support.hpp"

using namespace hcea;

TEST(TrialCsv, RoundTripIsExact) {
  const auto d = hcea::testing::sample_trial_dataset();
  std::stringstream ss;
  write_trial_csv(d, ss);
  auto parsed = parse_trial_csv(ss, d.grid);
  ASSERT_TRUE(parsed.errors.empty());
  EXPECT_EQ(parsed.dataset, d);
}

TEST(TrialCsv, RoundTripThroughFile) {
  auto cfg = pilot_shaped_config(3);
  const auto d = generate_synthetic_trial(cfg);
  const auto path = std::filesystem::temp_directory_path() / "hcea_csv_roundtrip.csv";
  write_trial_csv(d, path.string());
  const auto back = load_trial_csv(path.string(), d.grid);
  EXPECT_EQ(back, d);
  std::filesystem::remove(path);
}

TEST(TrialCsv, NaAndWhitespace) {
  std::stringstream ss(
      "id,arm,u0,u1,u2,u3,c1,c2,c3,age,ethnicity,employment\n"
      " p1 , 2 ,NA,1,1,1,NA,3.5,0,NA,NA,2\r\n"
      "\n");
  auto parsed = parse_trial_csv(ss, TimeGrid{});
  ASSERT_TRUE(parsed.errors.empty());
  ASSERT_EQ(parsed.dataset.records.size(), 1u);
  const auto& r = parsed.dataset.records[0];
  EXPECT_EQ(r.id, "p1");
  EXPECT_EQ(r.arm, 2);
  EXPECT_FALSE(r.utilities[0]);
  EXPECT_EQ(*r.costs[1], 3.5);
  EXPECT_FALSE(r.age);
  EXPECT_FALSE(r.ethnicity);
  EXPECT_EQ(*r.employment, 2);
}

TEST(TrialCsv, ErrorsCarryLineNumbers) {
  std::stringstream ss(
      "id,arm,u0,u1,u2,u3,c1,c2,c3,age,ethnicity,employment\n"
      "a,1,1,1,1,1,1,1,1,30,1,1\n"
      "b,3,1,1,1,1,1,1,1,30,1,1\n"
      "c,1,1.5,1,1,1,1,1,1,30,1,1\n"
      "d,1,1,1,1,1,-1,1,1,30,1,1\n"
      "e,1,1,1,1,1,1,1,1,30,0,1\n"
      "f,1,1,1,1\n"
      "g,1,x,1,1,1,1,1,1,30,1,1\n");
  auto parsed = parse_trial_csv(ss, TimeGrid{});
  ASSERT_EQ(parsed.errors.size(), 6u);
  EXPECT_NE(parsed.errors[0].find("line 3"), std::string::npos);
  EXPECT_NE(parsed.errors[1].find("line 4"), std::string::npos);
  EXPECT_NE(parsed.errors[2].find("line 5"), std::string::npos);
  EXPECT_NE(parsed.errors[3].find("line 6"), std::string::npos);
  EXPECT_NE(parsed.errors[3].find("categorical level"), std::string::npos);
  EXPECT_NE(parsed.errors[4].find("line 7"), std::string::npos);
  EXPECT_NE(parsed.errors[5].find("line 8"), std::string::npos);
  EXPECT_EQ(parsed.dataset.records.size(), 1u);
}

TEST(TrialCsv, EmptyFileAndWrongHeader) {
  std::stringstream empty("");
  auto p = parse_trial_csv(empty, TimeGrid{});
  ASSERT_EQ(p.errors.size(), 1u);
  EXPECT_NE(p.errors[0].find("empty"), std::string::npos);

  std::stringstream wrong("id,arm,u0,u1,c1,age,ethnicity,employment\n");
  auto q = parse_trial_csv(wrong, TimeGrid{});
  ASSERT_EQ(q.errors.size(), 1u);
  EXPECT_NE(q.errors[0].find("header"), std::string::npos);

  EXPECT_THROW(load_trial_csv("/nonexistent/file.csv", TimeGrid{}), InputError);
}

TEST(TrialCsv, CustomGridHeader) {
  TimeGrid g({0, 6}, 12);
  const auto h = trial_csv_header(g);
  const std::vector<std::string> expected{"id", "arm", "u0", "u1", "c1", "age", "ethnicity", "employment"};
  EXPECT_EQ(h, expected);
}

TEST(TimeGridJson, RoundTrip) {
  TimeGrid g({0, 1, 4, 12, 24}, 12);
  EXPECT_EQ(time_grid_from_json(time_grid_to_json(g)), g);
  EXPECT_THROW(time_grid_from_json(nlohmann::json::object()), InputError);
  EXPECT_THROW(time_grid_from_json({{"times_months", {3, 6}}}), InputError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 123456.789, 1e-300, 0.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}
