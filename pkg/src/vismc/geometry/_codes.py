import math

LEFT_OF, RIGHT_OF, ABOVE, BELOW, UNDER, ON, INSIDE, NEAR, OVERLAP_OR_NEAR = range(9)

RELATION_CODES = {
    "left_of": LEFT_OF,
    "right_of": RIGHT_OF,
    "above": ABOVE,
    "below": BELOW,
    "under": UNDER,
    "on": ON,
    "inside": INSIDE,
    "near": NEAR,
    "overlap_or_near": OVERLAP_OR_NEAR,
}

# diagonal of the unit image
SQRT2 = math.sqrt(2.0)
