/* Copyright 2026 The urbanseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <string>

#include "gtest/gtest.h"
#include "test_util.h"
#include "urbanseg/config.h"
#include "urbanseg/error.h"

namespace urbanseg {
namespace {

TEST(PipelineConfigTest, DefaultsMatchPublishedSettings) {
  const PipelineConfig c;
  EXPECT_EQ(c.provider, "oracle");
  EXPECT_EQ(c.segmenter.k_ratio, 3000u);
  EXPECT_EQ(c.segmenter.k_max, 100u);
  EXPECT_EQ(c.segmenter.merge_radius, 1.0);
  EXPECT_EQ(c.segmenter.score_threshold, 0.1);
  EXPECT_EQ(c.voxel_edge, 1.0 / 3.0);
  EXPECT_EQ(c.max_points, 500000u);
  EXPECT_EQ(c.oracle.dim, 16);
  EXPECT_EQ(c.ap_range, ApRange::k25To95);
  EXPECT_NO_THROW(c.Validate());
}

TEST(ParseConfigTest, ParsesEveryKey) {
  const PipelineConfig c = ParseConfig(
      "# tuned run\n"
      "version = 1\n"
      "provider = file:/tmp/f.useg\n"
      "k_ratio = 2000\n"
      "k_max = 50   # fewer candidates\n"
      "merge_radius = 0.75\n"
      "score_threshold = 0.2\n"
      "voxel_edge = 0.5\n"
      "max_points = 100000\n"
      "embedding_dim = 8\n"
      "seed = 42\n"
      "noise_embedding = 0.1\n"
      "noise_offset = 0.2\n"
      "noise_semantic = 0.05\n"
      "ap_range = 50-95\n"
      "scorer = gt\n");
  EXPECT_EQ(c.provider, "file:/tmp/f.useg");
  EXPECT_EQ(c.segmenter.k_ratio, 2000u);
  EXPECT_EQ(c.segmenter.k_max, 50u);
  EXPECT_EQ(c.segmenter.merge_radius, 0.75);
  EXPECT_EQ(c.segmenter.score_threshold, 0.2);
  EXPECT_EQ(c.voxel_edge, 0.5);
  EXPECT_EQ(c.max_points, 100000u);
  EXPECT_EQ(c.oracle.dim, 8);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.oracle.noise_embedding, 0.1);
  EXPECT_EQ(c.oracle.noise_offset, 0.2);
  EXPECT_EQ(c.oracle.noise_semantic, 0.05);
  EXPECT_EQ(c.ap_range, ApRange::k50To95);
  EXPECT_EQ(c.scorer, ScorerKind::kGroundTruth);
}

TEST(ParseConfigTest, FormatRoundTrips) {
  PipelineConfig c;
  c.segmenter.merge_radius = 1.0 / 7.0;
  c.seed = 9;
  c.scorer = ScorerKind::kGroundTruth;
  EXPECT_EQ(FormatConfig(ParseConfig(FormatConfig(c))), FormatConfig(c));
}

TEST(ParseConfigTest, ErrorsNameOffsetAndKey) {
  try {
    ParseConfig("version = 1\nmerge_radius = 1.0\nbogus = 3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "bogus");
    EXPECT_EQ(e.byte_offset(), 31u);
  }
  try {
    ParseConfig("version = 1\nk_max = ten\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "k_max");
  }
  EXPECT_THROW(ParseConfig("k_max = 3\n"), ParseError);
  EXPECT_THROW(ParseConfig("version = 2\n"), ParseError);
  EXPECT_THROW(ParseConfig(""), ParseError);
  EXPECT_THROW(ParseConfig("version = 1\njust words\n"), ParseError);
  EXPECT_THROW(ParseConfig("version = 1\nscorer = learned\n"), ParseError);
}

TEST(PipelineConfigTest, ValidationRejectsNonPositiveParameters) {
  PipelineConfig c = ParseConfig("version = 1\nmerge_radius = 0\n");
  EXPECT_THROW(c.Validate(), Error);
  c = ParseConfig("version = 1\nmerge_radius = -2\n");
  EXPECT_THROW(c.Validate(), Error);
  c = ParseConfig("version = 1\nk_ratio = 0\n");
  EXPECT_THROW(c.Validate(), Error);
  c = ParseConfig("version = 1\nvoxel_edge = 0\n");
  EXPECT_THROW(c.Validate(), Error);
  c = ParseConfig("version = 1\nembedding_dim = 0\n");
  EXPECT_THROW(c.Validate(), Error);
  c = ParseConfig("version = 1\nscore_threshold = 0\n");
  EXPECT_NO_THROW(c.Validate());
}

TEST(LoadConfigTest, MissingFileIsIoError) {
  try {
    LoadConfig("/nonexistent/urbanseg.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

}  // namespace
}  // namespace urbanseg
