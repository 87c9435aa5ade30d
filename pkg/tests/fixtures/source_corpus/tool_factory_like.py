from app_server import factory


@factory.tool_builder()
def not_a_tool(x):
    return x


@factory.register
def also_not_a_tool(y):
    return y
