#pragma once

#include "mfioc/errors.hpp"
#include "mfioc/linalg.hpp"
#include "mfioc/trajectory.hpp"
#include "mfioc/lqr.hpp"
#include "mfioc/data_pipeline.hpp"
#include "mfioc/assembly.hpp"
#include "mfioc/bsum.hpp"
#include "mfioc/recovery.hpp"
#include "mfioc/pipeline.hpp"
#include "mfioc/io.hpp"
#include "mfioc/paper_instance.hpp"
