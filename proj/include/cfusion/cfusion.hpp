#pragma once

#include "cfusion/decoder.hpp"
#include "cfusion/detection.hpp"
#include "cfusion/error.hpp"
#include "cfusion/feature_maps.hpp"
#include "cfusion/frustum_association.hpp"
#include "cfusion/geometry.hpp"
#include "cfusion/metrics.hpp"
#include "cfusion/objectives.hpp"
#include "cfusion/radar_cloud.hpp"
#include "cfusion/harness/batch.hpp"
#include "cfusion/harness/json_io.hpp"
#include "cfusion/harness/pipeline.hpp"
#include "cfusion/harness/render.hpp"
#include "cfusion/harness/scene.hpp"
#include "cfusion/harness/synth.hpp"
