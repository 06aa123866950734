// Copyright 2026 The covscreen Authors. All Rights Reserved.
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

#pragma once

#include <string>

#include "covscreen/schema.hpp"

namespace covscreen::test {

inline const std::string kHeader =
    "sex,contact_with_infected,days_of_symptoms,temp_gt_38,max_temp,cough,dyspnoea,"
    "muscle_aches,loss_of_smell_taste,sore_throat,headache,dizziness,skin_reactions,"
    "temperature,saturation,age,symptomatic,covid_test,holdout_flag";

/// Symptomatic record with every field answered.
inline SurveyRecord full_record(bool positive) {
    SurveyRecord r;
    r.sex = Sex::Male;
    r.contact_with_infected = positive;
    r.days_of_symptoms = positive ? 4 : 9;
    r.temp_gt_38 = positive;
    r.max_temp = positive ? 38.6 : 37.1;
    r.cough = true;
    r.dyspnoea = false;
    r.muscle_aches = true;
    r.loss_of_smell_taste = positive;
    r.sore_throat = false;
    r.headache = true;
    r.dizziness = false;
    r.skin_reactions = false;
    r.temperature = 36.9;
    r.saturation = 96;
    r.age = 54;
    r.symptomatic = true;
    r.covid_test = positive ? CovidTest::Positive : CovidTest::Negative;
    return r;
}

} // namespace covscreen::test
