/*
 * Copyright 2026 The FedGAN Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "fedgan/fedgan.h"

namespace {

std::string get(const fedgan_config* c, const char* key) {
  size_t needed = 0;
  REQUIRE(fedgan_config_get(c, key, nullptr, 0, &needed) == FEDGAN_ERR_BUFFER);
  std::string out(needed, '\0');
  REQUIRE(fedgan_config_get(c, key, out.data(), out.size(), &needed) ==
          FEDGAN_OK);
  out.resize(needed - 1);
  return out;
}

fedgan_config* quick_config() {
  fedgan_config* c = nullptr;
  REQUIRE(fedgan_config_parse("per_class=40\nholdout_per_class=30\n"
                              "metric_n=100\nrounds=2\nbatch_size=32\n"
                              "gen_hidden=8\ndisc_hidden=8\nlatent_dim=3\n"
                              "output=\n",
                              &c) == FEDGAN_OK);
  return c;
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::string(fedgan_version()) == "0.1.0");
  CHECK(std::string(fedgan_status_string(FEDGAN_OK)) == "ok");
  CHECK(std::string(fedgan_status_string(FEDGAN_ERR_FORMAT)) ==
        "format error");
}

TEST_CASE("config keys are enumerable") {
  const size_t n = fedgan_config_key_count();
  CHECK(n > 20);
  bool has_seed = false;
  for (size_t i = 0; i < n; ++i) {
    has_seed = has_seed || std::string(fedgan_config_key(i)) == "seed";
  }
  CHECK(has_seed);
  CHECK(fedgan_config_key(n) == nullptr);
}

TEST_CASE("config lifecycle and errors") {
  fedgan_config* c = nullptr;
  REQUIRE(fedgan_config_new(&c) == FEDGAN_OK);
  CHECK(get(c, "batch_size") == "64");
  CHECK(get(c, "lr") == "0.0002");
  CHECK(fedgan_config_set(c, "strategy", "g") == FEDGAN_OK);
  CHECK(get(c, "strategy") == "g");
  CHECK(fedgan_config_set(c, "nope", "1") == FEDGAN_ERR_CONFIG);
  CHECK(std::string(fedgan_last_error()).find("nope") != std::string::npos);
  CHECK(fedgan_config_set(c, "k_selected", "5") == FEDGAN_OK);
  CHECK(fedgan_config_validate(c) == FEDGAN_ERR_CONFIG);
  CHECK(std::string(fedgan_last_error()).find("K ≤ n") != std::string::npos);
  CHECK(fedgan_config_set(c, "k_selected", "2") == FEDGAN_OK);
  CHECK(fedgan_config_validate(c) == FEDGAN_OK);
  CHECK(std::string(fedgan_last_error()).empty());
  char small[2];
  size_t needed = 0;
  CHECK(fedgan_config_render(c, small, sizeof(small), &needed) ==
        FEDGAN_ERR_BUFFER);
  CHECK(needed > 2);
  fedgan_config_free(c);
  fedgan_config_free(nullptr);

  CHECK(fedgan_config_parse(nullptr, &c) == FEDGAN_ERR_ARGUMENT);
  CHECK(fedgan_config_parse("k_selected=5\nn_clients=2", &c) ==
        FEDGAN_ERR_CONFIG);
  CHECK(c == nullptr);
}

TEST_CASE("resolve precedence through the C interface") {
  const char* keys[] = {"rounds"};
  const char* values[] = {"9"};
  fedgan_config* c = nullptr;
  REQUIRE(fedgan_config_resolve("seed=1\nrounds=4\n", "8", keys, values, 1,
                                &c) == FEDGAN_OK);
  CHECK(get(c, "seed") == "8");
  CHECK(get(c, "rounds") == "9");
  fedgan_config_free(c);
  CHECK(fedgan_config_resolve(nullptr, nullptr, nullptr, nullptr, 1, &c) ==
        FEDGAN_ERR_ARGUMENT);
}

TEST_CASE("run an experiment and read it back") {
  fedgan_config* c = quick_config();
  fedgan_result* r = nullptr;
  REQUIRE(fedgan_run_experiment(c, &r) == FEDGAN_OK);
  CHECK(fedgan_result_round_count(r) == 2);
  fedgan_round_record rec{};
  CHECK(fedgan_result_round(r, 1, &rec) == FEDGAN_OK);
  CHECK(rec.round == 2);
  CHECK(rec.score >= 0.0);
  CHECK(fedgan_result_round(r, 2, &rec) == FEDGAN_ERR_ARGUMENT);
  fedgan_summary s{};
  CHECK(fedgan_result_summary(r, &s) == FEDGAN_OK);
  CHECK(s.has_optimal_round == 1);
  CHECK(s.final_score == rec.score);
  size_t needed = 0;
  CHECK(fedgan_result_csv(r, nullptr, 0, &needed) == FEDGAN_ERR_BUFFER);
  std::string csv(needed, '\0');
  CHECK(fedgan_result_csv(r, csv.data(), csv.size(), &needed) == FEDGAN_OK);
  CHECK(csv.rfind("round,score,emd,", 0) == 0);
  fedgan_result_free(r);
  fedgan_config_free(c);
}

TEST_CASE("compare, partition, gradcheck and oracle") {
  fedgan_config* c = quick_config();
  const uint64_t seeds[] = {3};
  fedgan_comparison* cmp = nullptr;
  REQUIRE(fedgan_compare(c, seeds, 1, &cmp) == FEDGAN_OK);
  REQUIRE(fedgan_comparison_row_count(cmp) == 4);
  fedgan_strategy_row row{};
  CHECK(fedgan_comparison_row(cmp, 2, &row) == FEDGAN_OK);
  CHECK(std::string(row.strategy) == "d");
  fedgan_comparison_free(cmp);
  CHECK(fedgan_compare(c, seeds, 0, &cmp) == FEDGAN_ERR_CONFIG);

  CHECK(fedgan_config_set(c, "partition", "noniid") == FEDGAN_OK);
  CHECK(fedgan_config_set(c, "per_class", "100") == FEDGAN_OK);
  size_t clients = 0;
  size_t classes = 0;
  REQUIRE(fedgan_partition_inspect(c, &clients, &classes, nullptr, 0) ==
          FEDGAN_OK);
  CHECK(clients == 2);
  CHECK(classes == 8);
  std::vector<size_t> counts(clients * classes);
  CHECK(fedgan_partition_inspect(c, &clients, &classes, counts.data(), 3) ==
        FEDGAN_ERR_BUFFER);
  REQUIRE(fedgan_partition_inspect(c, &clients, &classes, counts.data(),
                                   counts.size()) == FEDGAN_OK);
  for (size_t k = 0; k < classes; ++k) {
    CHECK(counts[k] + counts[classes + k] == 100);
  }

  fedgan_gradcheck_report g{};
  REQUIRE(fedgan_gradcheck(1, 3, &g) == FEDGAN_OK);
  CHECK(g.max_error_d <= 1e-4);

  fedgan_oracle_report o{};
  REQUIRE(fedgan_oracle(c, &o) == FEDGAN_OK);
  CHECK(o.n_classes == 8);
  CHECK(o.holdout_accuracy >= o.threshold);
  fedgan_config_free(c);
}

TEST_CASE("IDX helpers") {
  CHECK(fedgan_pixel_to_feature(0) == -1.0);
  CHECK(fedgan_pixel_to_feature(255) == 1.0);
  size_t rows = 0, cols = 0, classes = 0;
  CHECK(fedgan_idx_shape("/nonexistent/a", "/nonexistent/b", &rows, &cols,
                         &classes) == FEDGAN_ERR_IO);
}
