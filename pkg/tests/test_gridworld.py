import numpy as np
import pytest

from repeated_irl.gridworld import ACTIONS, Maze, MazeDistribution, compile_maze, sample_maze


def test_single_cell_self_loops():
    env = compile_maze(Maze.open(1))
    assert env.num_actions == 5
    assert np.all(env.transitions == 1.0)


def test_open_move_right():
    env = compile_maze(Maze.open(2))
    assert env.transitions[ACTIONS.index("right"), 0, 1] == 1.0


def test_wall_blocks_both_directions():
    maze = Maze(2, [[True], [False]], np.zeros((1, 2), bool))
    env = compile_maze(maze)
    nxt = env.successors
    assert nxt[ACTIONS.index("right"), 0] == 0
    assert nxt[ACTIONS.index("left"), 1] == 1
    assert nxt[ACTIONS.index("right"), 2] == 3


def test_vertical_wall():
    maze = Maze(2, np.zeros((2, 1), bool), [[False, True]])
    nxt = compile_maze(maze).successors
    assert nxt[ACTIONS.index("down"), 0] == 2
    assert nxt[ACTIONS.index("down"), 1] == 1
    assert nxt[ACTIONS.index("up"), 3] == 3


def test_border_moves_self_loop():
    nxt = compile_maze(Maze.open(3)).successors
    assert nxt[ACTIONS.index("up"), 1] == 1
    assert nxt[ACTIONS.index("left"), 3] == 3
    assert nxt[ACTIONS.index("down"), 7] == 7


def test_no_walls_at_p_zero(rng):
    maze = MazeDistribution("uniform", 0.0).sample(5, 0.8, rng)
    assert not maze.h_walls.any() and not maze.v_walls.any()


def test_all_walls_at_p_one(rng):
    env = compile_maze(MazeDistribution("uniform", 1.0).sample(4, 0.8, rng))
    assert np.all(env.successors == np.arange(16))


@pytest.mark.parametrize("kind", ["uniform", "varied"])
def test_marginal_wall_frequency(kind):
    rng = np.random.default_rng(0)
    h = np.zeros((4, 3))
    v = np.zeros((3, 4))
    n = 10_000
    for _ in range(n):
        m = MazeDistribution(kind).sample(4, 0.8, rng)
        h += m.h_walls
        v += m.v_walls
    assert np.all(np.abs(h / n - 0.5) <= 0.02)
    assert np.all(np.abs(v / n - 0.5) <= 0.02)


def test_varied_walls_share_a_row_density():
    # walls in one row are positively correlated under the varied family
    rng = np.random.default_rng(1)
    pairs = np.array([MazeDistribution("varied").sample(3, 0.8, rng).h_walls[0] for _ in range(5000)], float)
    assert np.corrcoef(pairs.T)[0, 1] > 0.1


def test_seeded_sampling():
    a = sample_maze(MazeDistribution("varied"), 5, 0.8, 42)
    b = sample_maze(MazeDistribution("varied"), 5, 0.8, 42)
    assert np.array_equal(a.h_walls, b.h_walls) and np.array_equal(a.v_walls, b.v_walls)


def test_json_round_trip(rng):
    maze = MazeDistribution().sample(4, 0.7, rng)
    back = Maze.from_json(maze.to_json())
    assert back.gamma == 0.7
    assert np.array_equal(back.h_walls, maze.h_walls) and np.array_equal(back.v_walls, maze.v_walls)


def test_ascii_dimensions():
    lines = Maze.open(3).ascii().splitlines()
    assert len(lines) == 7 and all(len(line) == 13 for line in lines)


def test_bad_distribution():
    with pytest.raises(ValueError):
        MazeDistribution("spiral")
    with pytest.raises(ValueError):
        MazeDistribution("uniform", 1.5)
