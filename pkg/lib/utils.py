def parse_window(window_string):
  # "LO:HI:STRIDE" -> (lo, hi, stride)
  parts = window_string.split(':')
  if len(parts) != 3:
    raise ValueError('window must look like LO:HI:STRIDE, got {!r}'.format(window_string))

  lo, hi, stride = map(int, parts)
  if lo < 0 or hi < lo or stride < 1:
    raise ValueError('window needs 0 <= LO <= HI and STRIDE >= 1, got {!r}'.format(window_string))

  return lo, hi, stride


def parse_int_list(list_string):
  # "1,1,2" -> [1, 1, 2]
  return [int(x) for x in list_string.replace(' ', '').split(',') if x]


def parse_matrix(matrix_string):
  # "1,1,0,0;0,0,1,1" -> [[1, 1, 0, 0], [0, 0, 1, 1]]
  return [parse_int_list(row) for row in matrix_string.split(';')]


def format_window(window):
  return '{}:{}:{}'.format(*window)
