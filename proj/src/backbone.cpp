#include "scar/backbone.hpp"

namespace scar {

std::vector<StackLayerDef> vgg10_layout(int conv1, int conv2, int conv3, int conv4) {
  return {
      {"conv1_1", conv1, 3, 1, true, false},
      {"conv1_2", conv1, 3, 1, true, true},
      {"conv2_1", conv2, 3, 1, true, false},
      {"conv2_2", conv2, 3, 1, true, true},
      {"conv3_1", conv3, 3, 1, true, false},
      {"conv3_2", conv3, 3, 1, true, false},
      {"conv3_3", conv3, 3, 1, true, true},
      {"conv4_1", conv4, 3, 1, true, false},
      {"conv4_2", conv4, 3, 1, true, false},
      {"conv4_3", conv4, 3, 1, true, false},
  };
}

std::vector<StackLayerDef> dilation_layout(int in_channels, int out_channels) {
  const int half = in_channels / 2;
  const int quarter = in_channels / 4;
  return {
      {"dilation_1", in_channels, 3, 2, true, false},
      {"dilation_2", in_channels, 3, 2, true, false},
      {"dilation_3", in_channels, 3, 2, true, false},
      {"dilation_4", half, 3, 2, true, false},
      {"dilation_5", quarter, 3, 2, true, false},
      {"dilation_6", out_channels, 3, 2, true, false},
  };
}

}  // namespace scar
