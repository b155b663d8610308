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

#include <cmath>
#include <limits>

#include "gtest/gtest.h"
#include "urbanseg/error.h"
#include "urbanseg/types.h"

namespace urbanseg {
namespace {

TEST(ClassifyHeightTest, BoundaryExamples) {
  EXPECT_EQ(ClassifyHeight(23.9), HeightClass::kLowRise);
  EXPECT_EQ(ClassifyHeight(24.0), HeightClass::kHighRise);
  EXPECT_EQ(ClassifyHeight(100.0), HeightClass::kHighRise);
  EXPECT_EQ(ClassifyHeight(100.0001), HeightClass::kSuperHighRise);
  EXPECT_EQ(ClassifyHeight(150.0), HeightClass::kSuperHighRise);
  EXPECT_EQ(ClassifyHeight(0.0), HeightClass::kLowRise);
}

TEST(ClassifyHeightTest, RejectsNegativeAndNan) {
  try {
    ClassifyHeight(-1.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
  EXPECT_THROW(ClassifyHeight(std::numeric_limits<double>::quiet_NaN()), Error);
}

TEST(ClassifyHeightTest, MonotoneInHeight) {
  int previous = 0;
  for (double h = 0.0; h < 300.0; h += 0.25) {
    const int code = ToCode(ClassifyHeight(h));
    EXPECT_GE(code, previous) << h;
    previous = code;
  }
}

TEST(TaxonomyTest, CodesAndNamesAreStable) {
  EXPECT_EQ(kNumUrbanClasses, 7);
  EXPECT_EQ(kNumBuildingCategories, 7);
  EXPECT_EQ(Name(UrbanClass::kGround), "Ground");
  EXPECT_EQ(Name(UrbanClass::kBuilding), "Building");
  EXPECT_EQ(ToCode(UrbanClass::kBuilding), 6);
  EXPECT_EQ(ToCode(BuildingCategory::kCommercial), 0);
  EXPECT_EQ(ToCode(BuildingCategory::kTemporary), 6);
  EXPECT_EQ(ToCode(BuildingCategory::kUnlabeled), 7);
  EXPECT_EQ(Name(BuildingCategory::kUnlabeled), "Unlabeled");
  EXPECT_EQ(Name(HeightClass::kSuperHighRise), "SuperHighRise");
  for (int c = 0; c < kNumUrbanClasses; ++c) {
    ASSERT_TRUE(UrbanClassFromCode(c).has_value());
    EXPECT_EQ(ToCode(*UrbanClassFromCode(c)), c);
  }
  EXPECT_FALSE(UrbanClassFromCode(7).has_value());
  EXPECT_FALSE(UrbanClassFromCode(-1).has_value());
  EXPECT_TRUE(BuildingCategoryFromCode(7).has_value());
  EXPECT_FALSE(BuildingCategoryFromCode(8).has_value());
  EXPECT_FALSE(HeightClassFromCode(3).has_value());
}

TEST(NoInstanceTest, SentinelIsReserved) {
  EXPECT_EQ(kNoInstance, std::numeric_limits<InstanceId>::max());
}

TEST(AnnotatedPointCloudTest, ValidateAcceptsConsistentCloud) {
  AnnotatedPointCloud cloud;
  cloud.Append({0, 0, 0}, {1, 2, 3}, UrbanClass::kGround, kNoInstance,
               BuildingCategory::kUnlabeled);
  cloud.Append({1, 0, 0}, {1, 2, 3}, UrbanClass::kBuilding, 17, BuildingCategory::kOffice);
  EXPECT_NO_THROW(cloud.Validate());
  EXPECT_EQ(cloud.size(), 2u);
}

TEST(AnnotatedPointCloudTest, ValidateRejectsInstanceOnNonBuilding) {
  AnnotatedPointCloud cloud;
  cloud.Append({0, 0, 0}, {}, UrbanClass::kGround, 3, BuildingCategory::kUnlabeled);
  EXPECT_THROW(cloud.Validate(), Error);
}

TEST(AnnotatedPointCloudTest, ValidateRejectsBuildingWithoutInstance) {
  AnnotatedPointCloud cloud;
  cloud.Append({0, 0, 0}, {}, UrbanClass::kBuilding, kNoInstance, BuildingCategory::kUnlabeled);
  EXPECT_THROW(cloud.Validate(), Error);
}

TEST(AnnotatedPointCloudTest, ValidateRejectsLengthMismatchAndNonFinite) {
  AnnotatedPointCloud cloud;
  cloud.Append({0, 0, 0}, {}, UrbanClass::kGround, kNoInstance, BuildingCategory::kUnlabeled);
  cloud.colors.push_back({});
  EXPECT_THROW(cloud.Validate(), Error);
  cloud.colors.pop_back();
  cloud.positions[0].x = std::numeric_limits<double>::infinity();
  EXPECT_THROW(cloud.Validate(), Error);
}

TEST(Vec3Test, Arithmetic) {
  const Vec3 a{1, 2, 3};
  const Vec3 b{4, 6, 3};
  EXPECT_EQ(b - a, (Vec3{3, 4, 0}));
  EXPECT_DOUBLE_EQ(Distance(a, b), 5.0);
  EXPECT_DOUBLE_EQ(Dot(a, b), 25.0);
  EXPECT_EQ(Cross(Vec3{1, 0, 0}, Vec3{0, 1, 0}), (Vec3{0, 0, 1}));
}

TEST(ErrorTest, ParseErrorNamesOffsetAndField) {
  const ParseError e(42, "vertex.instance", "missing");
  EXPECT_EQ(e.code(), ErrorCode::kParse);
  EXPECT_EQ(e.byte_offset(), 42u);
  EXPECT_EQ(e.field(), "vertex.instance");
  EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
  EXPECT_NE(std::string(e.what()).find("vertex.instance"), std::string::npos);
}

}  // namespace
}  // namespace urbanseg
