public void printName(Map<String, String> settings) {
    String name = settings.get("name");
    if (name != null) {
        System.out.println(name.trim());
    }
}
