#include "drgrad/census.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "drgrad/error.hpp"

namespace drgrad {

const CensusSchema& CensusSchema::kdd() {
  static const CensusSchema schema = [] {
    CensusSchema s;
    auto cat = [&s](const char* name) { s.columns.push_back({name, false}); };
    auto num = [&s](const char* name) { s.columns.push_back({name, true}); };
    num("age");
    cat("class_of_worker");
    cat("industry_code");
    cat("occupation_code");
    cat("education");
    num("wage_per_hour");
    cat("enrolled_in_edu");
    cat("marital_status");
    cat("major_industry");
    cat("major_occupation");
    cat("race");
    cat("hispanic_origin");
    cat("sex");
    cat("union_member");
    cat("unemployment_reason");
    cat("employment_stat");
    num("capital_gains");
    num("capital_losses");
    num("dividends");
    cat("tax_filer_stat");
    cat("region_prev_residence");
    cat("state_prev_residence");
    cat("household_family_stat");
    cat("household_summary");
    num("instance_weight");
    cat("migration_msa");
    cat("migration_reg");
    cat("migration_within_reg");
    cat("same_house_1yr");
    cat("migration_sunbelt");
    num("num_persons_worked");
    cat("family_members_under18");
    cat("country_father");
    cat("country_mother");
    cat("country_self");
    cat("citizenship");
    cat("own_business");
    cat("veteran_questionnaire");
    cat("veteran_benefits");
    num("weeks_worked");
    cat("year");
    cat("income");
    s.marital_index = 7;
    s.income_index = 41;
    return s;
  }();
  return schema;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

// Marital strings differ across census exports ("Never married" vs
// "Never-married"); compare with separators normalized.
std::string normalize_category(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    out.push_back(c == '-' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

struct RawRows {
  std::vector<std::vector<std::string>> rows;
  std::size_t skipped = 0;
};

RawRows read_rows(const std::filesystem::path& file, std::size_t expected_columns) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open census file: " + file.string());
  RawRows out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(trim(line.substr(start)));
        break;
      }
      fields.push_back(trim(line.substr(start, comma - start)));
      start = comma + 1;
    }
    if (fields.size() != expected_columns) {
      out.skipped += 1;
      continue;
    }
    out.rows.push_back(std::move(fields));
  }
  return out;
}

bool parse_double(const std::string& s, double& value) {
  try {
    std::size_t used = 0;
    value = std::stod(s, &used);
    return used == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> load_census(
    const std::filesystem::path& train_file, const std::filesystem::path& test_file,
    CensusLoadReport* report) {
  const CensusSchema& schema = CensusSchema::kdd();
  const std::size_t ncols = schema.columns.size();

  RawRows train_rows = read_rows(train_file, ncols);
  RawRows test_rows = read_rows(test_file, ncols);
  if (train_rows.rows.empty()) {
    throw SchemaError("census train file has no parseable rows: " + train_file.string());
  }

  // Feature column order: continuous first, then categoricals, file order
  // within each group. Label columns are excluded.
  std::vector<std::size_t> cont_cols, cat_cols;
  for (std::size_t c = 0; c < ncols; ++c) {
    if (c == schema.marital_index || c == schema.income_index) continue;
    (schema.columns[c].continuous ? cont_cols : cat_cols).push_back(c);
  }

  // Vocabulary per categorical column from the train split; id 0 is the
  // reserved unknown bucket.
  std::vector<std::unordered_map<std::string, std::int64_t>> vocab(cat_cols.size());
  for (const auto& row : train_rows.rows) {
    for (std::size_t k = 0; k < cat_cols.size(); ++k) {
      auto& map = vocab[k];
      const std::string key = normalize_category(row[cat_cols[k]]);
      if (!map.contains(key)) {
        const auto id = static_cast<std::int64_t>(map.size()) + 1;
        map.emplace(key, id);
      }
    }
  }

  // Train statistics for the continuous columns.
  std::vector<double> mean(cont_cols.size(), 0.0), stdev(cont_cols.size(), 0.0);
  std::vector<std::vector<double>> cont_values(cont_cols.size());
  std::size_t bad_numeric_train = 0;
  {
    std::vector<double> parsed(cont_cols.size());
    std::vector<std::vector<std::string>> kept;
    kept.reserve(train_rows.rows.size());
    for (auto& row : train_rows.rows) {
      bool ok = true;
      for (std::size_t k = 0; k < cont_cols.size() && ok; ++k) {
        ok = parse_double(row[cont_cols[k]], parsed[k]);
      }
      if (!ok) {
        bad_numeric_train += 1;
        continue;
      }
      for (std::size_t k = 0; k < cont_cols.size(); ++k) {
        cont_values[k].push_back(parsed[k]);
      }
      kept.push_back(std::move(row));
    }
    train_rows.rows = std::move(kept);
    train_rows.skipped += bad_numeric_train;
    for (std::size_t k = 0; k < cont_cols.size(); ++k) {
      double sum = 0.0;
      for (double v : cont_values[k]) sum += v;
      mean[k] = sum / static_cast<double>(cont_values[k].size());
      double ss = 0.0;
      for (double v : cont_values[k]) ss += (v - mean[k]) * (v - mean[k]);
      stdev[k] = std::sqrt(ss / static_cast<double>(cont_values[k].size()));
    }
  }

  const std::string never_married = "never married";
  auto build = [&](RawRows& raw, const std::string& split) {
    LabeledDataset ds;
    ds.split = split;
    std::vector<std::vector<std::string>> kept;
    kept.reserve(raw.rows.size());
    std::vector<double> parsed(cont_cols.size());
    for (auto& row : raw.rows) {
      bool ok = true;
      for (std::size_t k = 0; k < cont_cols.size() && ok; ++k) {
        ok = parse_double(row[cont_cols[k]], parsed[k]);
      }
      if (!ok) {
        raw.skipped += 1;
        continue;
      }
      kept.push_back(std::move(row));
    }
    raw.rows = std::move(kept);

    const std::size_t n = raw.rows.size();
    ds.dense = DenseMatrix(n, cont_cols.size());
    ds.sparse.assign(cat_cols.size(), {});
    for (auto& col : ds.sparse) col.reserve(n);
    ds.label1.reserve(n);
    ds.label2.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = raw.rows[i];
      for (std::size_t k = 0; k < cont_cols.size(); ++k) {
        double v = 0.0;
        parse_double(row[cont_cols[k]], v);
        ds.dense(i, k) = stdev[k] > 0.0 ? (v - mean[k]) / stdev[k] : 0.0;
      }
      for (std::size_t k = 0; k < cat_cols.size(); ++k) {
        const auto it = vocab[k].find(normalize_category(row[cat_cols[k]]));
        ds.sparse[k].push_back(it == vocab[k].end() ? 0 : it->second);
      }
      ds.label1.push_back(row[schema.income_index].find('+') != std::string::npos ? 1.0
                                                                                  : 0.0);
      ds.label2.push_back(
          normalize_category(row[schema.marital_index]) == never_married ? 1.0 : 0.0);
    }
    for (std::size_t k = 0; k < cat_cols.size(); ++k) {
      ds.sparse_vocab.push_back(vocab[k].size() + 1);  // + unknown bucket
    }
    return ds;
  };

  LabeledDataset train = build(train_rows, "train");
  LabeledDataset test = build(test_rows, "test");
  if (report) {
    report->rows_loaded = train.size() + test.size();
    report->rows_skipped = train_rows.skipped + test_rows.skipped;
  }
  return {std::move(train), std::move(test)};
}

std::pair<LabeledDataset, LabeledDataset> load_census(
    const std::filesystem::path& directory, CensusLoadReport* report) {
  return load_census(directory / "census-income.data", directory / "census-income.test",
                     report);
}

}  // namespace drgrad
