// Copyright 2026 The genaug Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace genaug {
namespace {

std::vector<ApAtIou> aps(double a, double b, double c) { return {{0.2, a}, {0.5, b}, {0.7, c}}; }

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TEST(Rows, AverageOfRoundedColumns) {
    const auto r = make_row(0.4, 500, 2, aps(0.5638, 0.4416, 0.1031), 77, 0.0);
    EXPECT_EQ(r.ap, (std::vector<double>{56.38, 44.16, 10.31}));
    EXPECT_DOUBLE_EQ(r.ap_avg, 36.95);
    EXPECT_EQ(r.attempts, 77U);
    // Average equals the mean of the rounded columns to 2 decimals.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const auto row = make_row(0.1, 10, 1, aps(u(rng), u(rng), u(rng)), 0, 0.0);
        const double mean = (row.ap[0] + row.ap[1] + row.ap[2]) / 3.0;
        ASSERT_LE(std::abs(row.ap_avg - mean), 0.005 + 1e-9);
    }
}

TEST(Rows, ColumnNames) {
    EXPECT_EQ(ap_column_name(0.2), "ap_02");
    EXPECT_EQ(ap_column_name(0.5), "ap_05");
    EXPECT_EQ(ap_column_name(0.75), "ap_075");
    EXPECT_EQ(csv_header(default_iou_thresholds()),
              "threshold,n_images,instances_per_image,ap_02,ap_05,ap_07,ap_avg,attempts,seconds");
}

TEST(Reports, CsvOneRowIsTwoLines) {
    const std::vector<ReportRow> rows{make_row(0.0, 30, 2, aps(1, 1, 1), 20, 0.0)};
    EXPECT_EQ(render_report(rows, ReportFormat::Csv),
              "threshold,n_images,instances_per_image,ap_02,ap_05,ap_07,ap_avg,attempts,seconds\n"
              "0.00,30,2,100.00,100.00,100.00,100.00,20,0.00\n");
}

TEST(Reports, CsvRoundTrip) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> k(0, 5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ReportRow> rows;
        for (int i = 0; i < 1 + trial % 7; ++i) {
            rows.push_back(make_row(0.1 * (i % 10), 1 + static_cast<std::size_t>(k(rng)) * 100, k(rng),
                                    aps(u(rng), u(rng), u(rng)),
                                    static_cast<std::size_t>(k(rng)) * 1000, 100 * u(rng)));
        }
        EXPECT_EQ(parse_csv_report(render_report(rows, ReportFormat::Csv)), rows);
    }
}

TEST(Reports, CsvWithOtherIouThresholds) {
    const std::vector<double> ious{0.5, 0.75};
    const std::vector<ReportRow> rows{make_row(0.3, 4, 1, std::vector<ApAtIou>{{0.5, 0.25}, {0.75, 0.125}}, 9, 0.0)};
    const auto text = render_report(rows, ReportFormat::Csv, ious);
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "threshold,n_images,instances_per_image,ap_05,ap_075,ap_avg,attempts,seconds");
    EXPECT_EQ(parse_csv_report(text), rows);
    EXPECT_THROW(render_report(rows, ReportFormat::Csv), std::invalid_argument);
}

TEST(Reports, MalformedCsv) {
    const auto code = [](const std::string& text) {
        try {
            parse_csv_report(text);
        } catch (const HarnessError& e) {
            return e.code();
        }
        return HarnessErrc::EmptyDataset;
    };
    EXPECT_EQ(code(""), HarnessErrc::MalformedReport);
    EXPECT_EQ(code("a,b,c\n"), HarnessErrc::MalformedReport);
    const std::string header = csv_header(default_iou_thresholds()) + "\n";
    EXPECT_EQ(code(header + "0.1,2,3\n"), HarnessErrc::MalformedReport);
    EXPECT_EQ(code(header + "0.1,2,x,1,1,1,1,1,1\n"), HarnessErrc::MalformedReport);
    EXPECT_EQ(code(header + "0.1,2,1,1,1,zz,1,1,1\n"), HarnessErrc::MalformedReport);
    EXPECT_TRUE(parse_csv_report(header).empty());
}

TEST(Reports, MarkdownGolden) {
    auto baseline = make_row(0.4, 500, 0, aps(0.5638, 0.4416, 0.1031), 0, 0.0);
    auto augmented = make_row(0.4, 500, 2, aps(0.6, 0.455, 0.1225), 1234, 0.0);
    const std::vector<ReportRow> rows{baseline, augmented};
    EXPECT_EQ(render_report(rows, ReportFormat::Markdown),
              read_file(std::string(TEST_DATA_DIR) + "/report_golden.md"));
    testing::TempDir dir;
    emit_report(rows, ReportFormat::Markdown, dir / "nested/dir/report.md");
    EXPECT_EQ(read_file(dir / "nested/dir/report.md"), render_report(rows, ReportFormat::Markdown));
    EXPECT_THROW(render_report(std::vector<ReportRow>{}, ReportFormat::Csv), std::invalid_argument);
}

Dataset scenes(int n, const std::string& prefix, std::uint64_t seed) {
    ToySceneParams p;
    p.n_images = n;
    p.image_size = 192;
    p.id_prefix = prefix;
    return make_toy_dataset(p, seed);
}

class CountingGenerator final : public GeneratorBackend {
  public:
    [[nodiscard]] GeneratorCapabilities capabilities() const override { return {96, true}; }
    GenerationResult fill(const MaskedPatch& masked, std::uint64_t seed) override {
        ++calls;
        return inner_.fill(masked, seed);
    }
    std::atomic<int> calls{0};

  private:
    ToyGenerator inner_;
};

TEST(Sweep, RowsOrderedByThresholdThenSeed) {
    const auto train = scenes(6, "train", 1);
    const auto test = scenes(3, "test", 2);
    testing::SolidGenerator gen;
    testing::ConstantDetector det(0.5);
    SweepSpec spec;
    spec.thresholds = {0.2, 0.7};
    spec.seeds = {4, 5};
    spec.target = 3;
    spec.base.max_attempts_per_instance = 2;
    const auto rows = threshold_sweep(spec, train, test, {gen, det}, toy_eval_detector_factory());
    ASSERT_EQ(rows.size(), 4U);
    EXPECT_EQ(rows[0].threshold, 0.2);
    EXPECT_EQ(rows[1].threshold, 0.2);
    EXPECT_EQ(rows[2].threshold, 0.7);
    EXPECT_EQ(rows[0].attempts, 3U);
    EXPECT_FALSE(rows[0].budget_exhausted);
    EXPECT_EQ(rows[2].attempts, 6U);
    EXPECT_TRUE(rows[2].budget_exhausted);
    for (const auto& r : rows) {
        EXPECT_EQ(r.n_images, 6U);
        EXPECT_EQ(r.instances_per_image, 2);
        EXPECT_EQ(r.seconds, 0.0);
        EXPECT_EQ(r.ap.size(), 3U);
    }
}

TEST(Sweep, RejectsOverlapAndBadSpecs) {
    const auto train = scenes(3, "a", 1);
    testing::SolidGenerator gen;
    testing::ConstantDetector det(0.5);
    SweepSpec spec;
    spec.target = 1;
    try {
        threshold_sweep(spec, train, train, {gen, det}, toy_eval_detector_factory());
        FAIL();
    } catch (const HarnessError& e) {
        EXPECT_EQ(e.code(), HarnessErrc::InvalidSpec);
    }
    SweepSpec bad;
    bad.thresholds = {1.5};
    EXPECT_THROW(bad.validate(), HarnessError);
    bad = SweepSpec{};
    bad.iou_thresholds = {0.0};
    EXPECT_THROW(bad.validate(), HarnessError);
    bad = SweepSpec{};
    bad.seeds.clear();
    EXPECT_THROW(bad.validate(), HarnessError);
    EXPECT_EQ(default_sweep_thresholds().size(), 10U);
    EXPECT_DOUBLE_EQ(default_sweep_thresholds().back(), 0.9);
}

TEST(Grid, NineRowsWithGeneratorFreeBaseline) {
    const auto train = scenes(9, "train", 3);
    const auto test = scenes(3, "test", 4);
    SweepSpec spec;
    spec.dataset_sizes = {3, 6, 9};
    spec.instances_per_image = {0, 1, 2};
    spec.base.acceptance_threshold = 0.0;
    CountingGenerator gen;
    testing::ConstantDetector det(0.9);
    const auto rows = size_grid(spec, train, test, {gen, det}, toy_eval_detector_factory());
    ASSERT_EQ(rows.size(), 9U);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].n_images, spec.dataset_sizes[i / 3]);
        EXPECT_EQ(rows[i].instances_per_image, spec.instances_per_image[i % 3]);
        EXPECT_EQ(rows[i].attempts, rows[i].n_images * static_cast<std::size_t>(rows[i].instances_per_image));
    }
    EXPECT_EQ(gen.calls.load(), 3 * 1 + 3 * 2 + 6 * 1 + 6 * 2 + 9 * 1 + 9 * 2);

    SweepSpec baseline = spec;
    baseline.instances_per_image = {0};
    testing::SolidGenerator other;
    const auto base_rows = size_grid(baseline, train, test, {other, det}, toy_eval_detector_factory());
    ASSERT_EQ(base_rows.size(), 3U);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(base_rows[i], rows[3 * i]);
}

TEST(Grid, InvalidSizes) {
    const auto train = scenes(3, "train", 3);
    testing::SolidGenerator gen;
    testing::ConstantDetector det(0.9);
    SweepSpec spec;
    EXPECT_THROW(size_grid(spec, train, scenes(1, "t", 1), {gen, det}, toy_eval_detector_factory()),
                 HarnessError);
    spec.dataset_sizes = {4};
    EXPECT_THROW(size_grid(spec, train, scenes(1, "t", 1), {gen, det}, toy_eval_detector_factory()),
                 HarnessError);
}

TEST(Grid, PrefixesNest) {
    const auto ds = scenes(10, "x", 5);
    const auto small = shuffled_prefix(ds, 4, 9);
    const auto large = shuffled_prefix(ds, 8, 9);
    for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small[i].id(), large[i].id());
    EXPECT_EQ(shuffled_prefix(ds, 10, 9).size(), 10U);
}

TEST(Sweep, AverageOverSeeds) {
    std::vector<ReportRow> rows{make_row(0.4, 10, 2, aps(0.5, 0.4, 0.1), 10, 0.0),
                                make_row(0.4, 10, 2, aps(0.6, 0.5, 0.2), 13, 0.0),
                                make_row(0.5, 10, 2, aps(0.7, 0.6, 0.3), 20, 0.0)};
    rows[1].budget_exhausted = true;
    const auto avg = average_over_seeds(rows);
    ASSERT_EQ(avg.size(), 2U);
    EXPECT_EQ(avg[0].ap, (std::vector<double>{55.0, 45.0, 15.0}));
    EXPECT_DOUBLE_EQ(avg[0].ap_avg, 38.33);
    EXPECT_EQ(avg[0].attempts, 12U);
    EXPECT_TRUE(avg[0].budget_exhausted);
    EXPECT_EQ(avg[1], rows[2]);
}

TEST(Histogram, CountsAndCoverage) {
    const Dataset ds({ImageRecord("a", Raster(200, 200, 3),
                                  {{{0, 0, 10, 20}, "car"}, {{0, 0, 48, 48}, "car"}, {{0, 0, 49, 10}, "car"},
                                   {{0, 0, 5, 5}, "car"}})});
    const auto h = instance_size_histogram(ds, 16);
    EXPECT_EQ(h.total(), 4U);
    EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1, 0, 2}));
    EXPECT_DOUBLE_EQ(h.coverage(48), 0.75);
    EXPECT_DOUBLE_EQ(h.coverage(4), 0.0);
    EXPECT_THROW(instance_size_histogram(ds, 0), std::invalid_argument);
    try {
        instance_size_histogram(Dataset({ImageRecord("e", Raster(8, 8, 3), {})}), 8);
        FAIL();
    } catch (const HarnessError& e) {
        EXPECT_EQ(e.code(), HarnessErrc::EmptyDataset);
    }
}

}  // namespace
}  // namespace genaug
